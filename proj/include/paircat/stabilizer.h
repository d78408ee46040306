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

#ifndef PAIRCAT_STABILIZER_H
#define PAIRCAT_STABILIZER_H

#include <vector>

#include "paircat/hilbert.h"

namespace paircat {

/// -K (a^dag^2 b^dag^2 - conj(g)^4)(a^2 b^2 - g^4) on modes 0 and 1.
Operator stabilizer_hamiltonian(cplx gamma, double K, const CompositeSpace &space);

struct SpectrumResult {
    int mu = 1;
    int delta = 0;
    int n_max = 0;
    Eigen::VectorXd eigenvalues;  // descending; the first is the code state
    double gap = 0;               // |E_e1|
    double overlap_e1 = 0;        // |<e1|psi_e1>|^2
    double top_fidelity = 0;      // |<e0|mu_{g,delta}>|^2
};

/// Diagonalizes the (mu, delta) block of -K F^dag F, built directly on |n, n + delta>.
SpectrumResult block_spectrum(cplx gamma, double K, int mu, int delta, int n_max = -1);

/// |E_{e1,+,delta} - E_{e1,-,delta}|.
double parity_gap_degeneracy(cplx gamma, double K, int delta, int n_max = -1);

/// Powers in a^dag^m a^n b^dag^p b^q.
struct MonomialIndex {
    int m = 0, n = 0, p = 0, q = 0;
    int order() const {
        return m + n + p + q;
    }
    bool operator==(const MonomialIndex &) const = default;
};

std::vector<MonomialIndex> enumerate_monomials(int max_order, bool conserve_delta);

struct NullspaceResult {
    std::vector<MonomialIndex> monomials;
    std::vector<cplx> gamma_samples;
    // Real coefficient vectors (Re f then Im f), orthonormal columns, one matrix per sample.
    std::vector<Eigen::MatrixXd> basis;
    std::vector<double> residuals;
    Eigen::MatrixXd common;  // intersection of all sample nullspaces
    bool gamma_dependent = false;
    std::vector<int> dependent_dims;  // per sample: dim(basis) - dim(common)

    /// Real layout of complex coefficients f[k] as (Re f, Im f).
    Eigen::VectorXd pack(const std::vector<cplx> &f) const;
    /// Largest |projection| of a unit vector onto each sample nullspace, minimized over samples.
    double containment(const Eigen::VectorXd &v) const;
    /// Overlap of v's gamma-dependent part (orthogonal to `common`) with the sample-s nullspace.
    double dependent_overlap(const Eigen::VectorXd &v, size_t s) const;
};

/// Numeric nullspace of H |g_{d0}> = H |(ig)_{d0}> = 0 plus Hermiticity, over all monomials
/// up to max_order, for each gamma sample. n_max <= 0 uses the per-sample heuristic.
NullspaceResult search_low_order_hamiltonian(int max_order, int delta0, const std::vector<cplx> &gamma_samples,
                                             bool conserve_delta, int n_max = -1, double tol = 1e-8);

std::vector<cplx> default_gamma_samples();

/// Coefficients of F^dag F in the monomial list (zero for absent terms).
std::vector<cplx> ffdag_coefficients(const std::vector<MonomialIndex> &monomials, cplx gamma);

/// Relative residual of
/// P_d a^dag^n b^dag^m |g,g> = P_d a^dag^(n+1) b^dag^(m-1) |g,g> + ((d + n - m + 1) / g) P_d a^dag^n b^dag^(m-1) |g,g>.
double verify_recursion_identity(cplx gamma, int delta, int n, int m, int n_max = -1);

}  // namespace paircat

#endif
