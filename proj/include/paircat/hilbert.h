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

#ifndef PAIRCAT_HILBERT_H
#define PAIRCAT_HILBERT_H

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace paircat {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// Single bosonic mode truncated to |0> ... |n_max>.
struct ModeSpace {
    int n_max = 1;
    int dim() const {
        return n_max + 1;
    }
    bool operator==(const ModeSpace &) const = default;
};

/// Ordered product of modes. Basis index runs with mode 0 fastest, so on two
/// modes |n_a, n_b> sits at n_a + (n_max_a + 1) * n_b.
struct CompositeSpace {
    std::vector<ModeSpace> modes;

    CompositeSpace() = default;
    explicit CompositeSpace(std::vector<ModeSpace> modes);
    static CompositeSpace uniform(int num_modes, int n_max);

    size_t dim() const;
    size_t num_modes() const {
        return modes.size();
    }
    size_t stride(size_t mode) const;
    int occupation(size_t index, size_t mode) const;
    size_t index_of(const std::vector<int> &occupations) const;
    bool operator==(const CompositeSpace &) const = default;
};

struct Operator {
    CompositeSpace space;
    SpMat mat;

    Operator adjoint() const;
    Vec apply(const Vec &v) const {
        return mat * v;
    }
};

Operator operator*(const Operator &a, const Operator &b);
Operator operator+(const Operator &a, const Operator &b);
Operator operator-(const Operator &a, const Operator &b);
Operator operator*(cplx s, const Operator &a);

struct StateVector {
    CompositeSpace space;
    Vec amp;

    double norm() const {
        return amp.norm();
    }
};

struct DensityMatrix {
    CompositeSpace space;
    Mat rho;

    static DensityMatrix pure(const StateVector &psi);
};

/// Photon-number cutoff per mode for amplitude gamma: ceil(|g|^2 + 8 sqrt(|g|^2 + 1) + 8).
int nmax_for(cplx gamma);

/// Norm lost by truncating the product coherent state |gamma, gamma>.
struct TailCheck {
    double lost = 0;
    bool ok = true;
};
TailCheck tail_check(cplx gamma, int n_max, double tol = 1e-10);

Operator identity(const CompositeSpace &space);
Operator annihilation(const CompositeSpace &space, size_t mode);
Operator creation(const CompositeSpace &space, size_t mode);
Operator number(const CompositeSpace &space, size_t mode);

/// Diagonal projector onto n_b - n_a = delta for the mode pair (mode_a, mode_b).
/// For delta < 0 these are the states |n + |delta|, n>.
Operator delta_projector(const CompositeSpace &space, int delta, size_t mode_a = 0, size_t mode_b = 1);

/// (I + parity (-1)^n) / 2 on one mode.
Operator parity_projector(const CompositeSpace &space, size_t mode, int parity);

/// exp(alpha a^dag - conj(alpha) a) on one mode, from a dense exponential.
/// Prints a warning when D(alpha)|0> leaks more than 1e-10 past the cutoff.
Operator displacement(const CompositeSpace &space, size_t mode, cplx alpha);

StateVector fock_state(const CompositeSpace &space, const std::vector<int> &occupations);

/// Truncated product of coherent states, not renormalized.
StateVector coherent_state(const CompositeSpace &space, const std::vector<cplx> &alphas);

/// Tensor product with the first factor as the fastest index (matches the basis order).
SpMat tensor(const std::vector<SpMat> &factors);
Vec tensor(const std::vector<Vec> &factors);

/// A subset of basis states, used to evolve inside conserved sectors.
struct Subspace {
    CompositeSpace space;
    std::vector<size_t> indices;
    std::vector<long> position;  // full index -> local index or -1

    size_t dim() const {
        return indices.size();
    }
    SpMat restrict(const SpMat &op) const;
    SpMat restrict_rect(const SpMat &op, const Subspace &from) const;
    Vec restrict(const Vec &v) const;
    Vec lift(const Vec &v) const;
};

Subspace make_subspace(const CompositeSpace &space, std::vector<size_t> indices);

/// Basis states of a mode pair with n_b - n_a in `deltas`.
Subspace delta_sector(const CompositeSpace &space, const std::vector<int> &deltas, size_t mode_a = 0,
                      size_t mode_b = 1);

/// Max-abs entry of a sparse matrix.
double max_abs(const SpMat &m);

void warn(const std::string &msg);

}  // namespace paircat

#endif
