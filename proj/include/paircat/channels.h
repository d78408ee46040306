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

#ifndef PAIRCAT_CHANNELS_H
#define PAIRCAT_CHANNELS_H

#include <functional>
#include <string>
#include <vector>

#include "paircat/paircat.h"

namespace paircat {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

/// Channel on logical 2x2 density matrices in the |0>_c, |1>_c basis.
using CodeChannel = std::function<Mat2(const Mat2 &)>;

/// r_jk in E(rho) = sum r_jk W_j rho W_k^dag, W in (I, X, Y, Z).
struct PauliProcess {
    Mat4 r = Mat4::Zero();
    double leakage = 0;  // weight lost from the code sector, averaged over |0><0| and |1><1|

    cplx operator()(int j, int k) const {
        return r(j, k);
    }
};

struct KrausChannel {
    std::vector<Operator> ops;
    double completeness_defect = 0;  // max |sum E^dag E - I|

    Mat apply(const Mat &rho) const;
};

/// {E^a_k E^b_l : k, l <= k_max} with E_k = eps^{k/2} (1 - eps)^{n/2} a^k / sqrt(k!).
KrausChannel lbc_kraus(double epsilon, int k_max, const CompositeSpace &space);

/// Per-mode loss probability for rate kappa1 and duration t.
inline double loss_epsilon(double kappa1_t) {
    return -std::expm1(-kappa1_t);
}

/// Code states |mu_{g,d}> for |d| <= delta_max stacked as columns; col 2 * (d + delta_max) + (mu < 0).
struct CodeSectorBasis {
    cplx gamma;
    int delta_max = 0;
    CompositeSpace space;
    Mat states;

    int column(int mu, int delta) const {
        return 2 * (delta + delta_max) + (mu < 0 ? 1 : 0);
    }
    int size() const {
        return (int)states.cols();
    }
};

CodeSectorBasis code_sector_basis(cplx gamma, int delta_max, int n_max = -1);

/// P + sum_{k <= order} (k1 t)^k / k! (P L_E P)^k with L_E = D[a] + D[b], acting on matrices in
/// the code-sector basis.
struct StabilizedChannel {
    CodeSectorBasis basis;
    double kappa1_t = 0;
    int order = 0;
    std::vector<Mat> jump_blocks;  // B^dag L B
    Mat decay_block;               // sum B^dag L^dag L B

    Mat apply(const Mat &rho) const;
    /// Takes a logical state of the delta = 0 code and returns the sector-basis output.
    Mat apply_logical(const Mat2 &rho) const;
};

StabilizedChannel stabilized_loss_channel(cplx gamma, double kappa1_t, int order, int delta_max = 4,
                                          int n_max = -1);

/// R_d = sum_mu' |mu''_{g,0}><mu'_{g',d}|, mu'' = mu' (-1)^|d|, as 2 x dim maps into logical coordinates.
/// Weight outside the domain states is dropped and shows up as leakage.
struct RecoveryMap {
    cplx gamma;
    cplx gamma_domain;
    int delta_max = 0;
    std::vector<Eigen::MatrixX2cd> domain;  // per d: dim x 2 columns |+'_{d}>, |-'_{d}>

    Mat2 apply(const Mat &rho) const;
    /// Same map on the code-sector basis of a stabilized channel (domain gamma equal to gamma).
    static Mat2 apply_sector(const Mat &rho, int delta_max);
};

enum class RecoveryVariant { Stabilized, Lbc };

RecoveryMap recovery_map(cplx gamma, int delta_max, RecoveryVariant variant, double epsilon = 0,
                         int n_max = -1);

/// Solves the 16 x 16 system of W_k^* (x) W_j superoperators for r.
PauliProcess process_tomography(const CodeChannel &channel);

/// Full-space channel: embeds code matrix units through the frame and projects outputs back.
PauliProcess process_tomography(const std::function<Mat(const Mat &)> &channel, const CodeFrame &frame);

/// Closed-form recovered LBC in the (rho++, rho+-, rho-+, rho--) basis.
Mat4 analytic_lbc_matrix(cplx gamma, double epsilon, int k_max);
PauliProcess analytic_lbc_process(cplx gamma, double epsilon, int k_max);

/// Process matrix chi_jk over n-qubit Pauli strings from a column-stacked superoperator,
/// read off the Choi matrix. String j has Pauli (j >> 2q) & 3 on qubit q (qubit 0 is the
/// fastest basis index).
Mat pauli_chi(const Mat &superop, int num_qubits);
/// "IZ"-style label, qubit 0 first.
std::string pauli_label(int j, int num_qubits);
/// n-qubit Pauli string matrix for index j.
Mat pauli_string(int j, int num_qubits);

/// Trace distance 0.5 |A - B|_1 for Hermitian inputs.
double trace_distance(const Mat &a, const Mat &b);

}  // namespace paircat

#endif
