// Copyright 2026 The paircat-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PAIRCAT_PAIRCAT_H
#define PAIRCAT_PAIRCAT_H

#include <array>

#include "paircat/hilbert.h"

namespace paircat {

/// Modified Bessel I_nu(x) and Bessel J_nu(x) by power series. Fine for x up to a few tens.
double bessel_i(int nu, double x);
double bessel_j(int nu, double x);

/// e^{-2|g|^2} I_|delta|(2|g|^2).
double norm_delta(cplx gamma, int delta);

/// e^{-2|g|^2} [I ± J]_|delta|(2|g|^2) / 2, summed over one parity class so that
/// the odd branch keeps full relative precision as gamma -> 0.
double norm_pm(cplx gamma, int delta, int mu);

struct PairCatParams {
    cplx gamma;
    int delta = 0;
    CompositeSpace space;  // exactly two modes: a then b

    static PairCatParams make(cplx gamma, int delta, int n_max = -1);
};

/// P_delta |g, g> / sqrt(N_delta). At gamma = 0 this is the Fock survivor.
StateVector pair_coherent_state(const PairCatParams &p);

/// |mu_{gamma,delta}>. Parity is read from mode a when delta >= 0 and from mode b otherwise.
StateVector code_state(const PairCatParams &p, int mu);

struct CodeFrame {
    PairCatParams params;
    StateVector plus, minus, zero, one;
    double norm_delta = 0;
    double norm_plus = 0;
    double norm_minus = 0;
    double r = 1;    // sqrt(N_- / N_+)
    double phi = 0;  // 2|g|^2 - (2 delta + 1) pi / 4
    Operator code_projector;
    Operator x, y, z;

    /// dim x 2 matrix whose columns are |0>_c, |1>_c.
    Mat logical_basis() const;
};

CodeFrame code_frame(const PairCatParams &p);

/// Coefficients (c_I, c_X, c_Y, c_Z) of P_c op P_c.
std::array<cplx, 4> pauli_project(const Operator &op, const CodeFrame &frame);

/// The 2x2 Pauli matrices in the order I, X, Y, Z (logical |0>, |1> basis).
const std::array<Eigen::Matrix2cd, 4> &pauli_matrices();

}  // namespace paircat

#endif
