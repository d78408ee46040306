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

#include "paircat/stabilizer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "paircat/paircat.h"

namespace paircat {

Operator stabilizer_hamiltonian(cplx gamma, double K, const CompositeSpace &space) {
    Operator a = annihilation(space, 0);
    Operator b = annihilation(space, 1);
    cplx g4 = std::pow(gamma, 4);
    Operator F = a * a * b * b - g4 * identity(space);
    return cplx(-K) * (F.adjoint() * F);
}

namespace {

// log |g|^k / sqrt(k!) with the phase k arg(g) kept apart.
cplx coherent_amp(cplx g, int k) {
    if (k < 0) {
        return 0;
    }
    if (std::abs(g) == 0) {
        return k == 0 ? 1.0 : 0.0;
    }
    double lm = k * std::log(std::abs(g)) - 0.5 * std::lgamma(k + 1.0);
    return std::polar(std::exp(lm), k * std::arg(g));
}

}  // namespace

SpectrumResult block_spectrum(cplx gamma, double K, int mu, int delta, int n_max) {
    int d = std::abs(delta);
    if (n_max <= 0) {
        n_max = nmax_for(gamma) + d + 8;
    }
    if (!tail_check(gamma, n_max - d).ok) {
        throw std::invalid_argument("block_spectrum: cutoff too small for gamma");
    }
    int p = mu > 0 ? 0 : 1;
    std::vector<int> ns;
    for (int n = p; n + d <= n_max; n += 2) {
        ns.push_back(n);
    }
    int dim = (int)ns.size();
    if (dim < 3) {
        throw std::invalid_argument("block_spectrum: block dimension below 3");
    }
    cplx g4 = std::pow(gamma, 4);
    Mat F = Mat::Zero(dim, dim);
    for (int i = 0; i < dim; i++) {
        int n = ns[i], m = n + d;
        F(i, i) = -g4;
        if (i > 0) {
            F(i - 1, i) = std::sqrt((double)n * (n - 1) * m * (m - 1));
        }
    }
    Mat H = -K * (F.adjoint() * F);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);

    SpectrumResult res;
    res.mu = mu;
    res.delta = delta;
    res.n_max = n_max;
    res.eigenvalues = es.eigenvalues().reverse();
    res.gap = std::abs(res.eigenvalues(1));
    Vec e0 = es.eigenvectors().col(dim - 1);
    Vec e1 = es.eigenvectors().col(dim - 2);

    Vec code(dim), psi(dim);
    cplx gc = std::conj(gamma);
    for (int i = 0; i < dim; i++) {
        int na = ns[i], nb = na + d;
        code(i) = coherent_amp(gamma, na) * coherent_amp(gamma, nb);
        psi(i) = std::sqrt((double)na) * coherent_amp(gamma, na - 1) * coherent_amp(gamma, nb) +
                 std::sqrt((double)nb) * coherent_amp(gamma, na) * coherent_amp(gamma, nb - 1) -
                 2.0 * gc * code(i);
    }
    code.normalize();
    res.top_fidelity = std::norm(e0.dot(code));
    if (psi.norm() > 0) {
        psi.normalize();
        res.overlap_e1 = std::norm(e1.dot(psi));
    }
    return res;
}

double parity_gap_degeneracy(cplx gamma, double K, int delta, int n_max) {
    SpectrumResult p = block_spectrum(gamma, K, 1, delta, n_max);
    SpectrumResult m = block_spectrum(gamma, K, -1, delta, n_max);
    return std::abs(p.eigenvalues(1) - m.eigenvalues(1));
}

std::vector<MonomialIndex> enumerate_monomials(int max_order, bool conserve_delta) {
    std::vector<MonomialIndex> out;
    for (int order = 0; order <= max_order; order++) {
        for (int m = 0; m <= order; m++) {
            for (int n = 0; m + n <= order; n++) {
                for (int p = 0; m + n + p <= order; p++) {
                    int q = order - m - n - p;
                    if (conserve_delta && n + p != m + q) {
                        continue;
                    }
                    out.push_back({m, n, p, q});
                }
            }
        }
    }
    return out;
}

std::vector<cplx> default_gamma_samples() {
    std::vector<cplx> out;
    for (double r : {0.7, 1.1, 1.6}) {
        for (cplx ph : {cplx(1), std::polar(1.0, M_PI / 5)}) {
            out.push_back(r * ph);
        }
    }
    return out;
}

std::vector<cplx> ffdag_coefficients(const std::vector<MonomialIndex> &monomials, cplx gamma) {
    std::vector<cplx> f(monomials.size(), 0.0);
    cplx g4 = std::pow(gamma, 4);
    for (size_t k = 0; k < monomials.size(); k++) {
        const auto &x = monomials[k];
        if (x == MonomialIndex{2, 2, 2, 2}) {
            f[k] = 1;
        } else if (x == MonomialIndex{2, 0, 2, 0}) {
            f[k] = -g4;
        } else if (x == MonomialIndex{0, 2, 0, 2}) {
            f[k] = -std::conj(g4);
        } else if (x == MonomialIndex{0, 0, 0, 0}) {
            f[k] = std::norm(g4);
        }
    }
    return f;
}

Eigen::VectorXd NullspaceResult::pack(const std::vector<cplx> &f) const {
    Eigen::Index M = (Eigen::Index)f.size();
    Eigen::VectorXd v(2 * M);
    for (Eigen::Index k = 0; k < M; k++) {
        v(k) = f[k].real();
        v(M + k) = f[k].imag();
    }
    return v;
}

double NullspaceResult::containment(const Eigen::VectorXd &v) const {
    Eigen::VectorXd u = v.normalized();
    double worst = 1;
    for (const auto &B : basis) {
        worst = std::min(worst, B.cols() ? (B.transpose() * u).norm() : 0.0);
    }
    return worst;
}

double NullspaceResult::dependent_overlap(const Eigen::VectorXd &v, size_t s) const {
    Eigen::VectorXd w = v;
    if (common.cols() > 0) {
        w -= common * (common.transpose() * v);
    }
    if (w.norm() < 1e-12 * v.norm()) {
        return 0;
    }
    w.normalize();
    return basis[s].cols() ? (basis[s].transpose() * w).norm() : 0.0;
}

namespace {

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd &X) {
    if (X.cols() == 0) {
        return X;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    return qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), X.cols());
}

}  // namespace

NullspaceResult search_low_order_hamiltonian(int max_order, int delta0, const std::vector<cplx> &gamma_samples,
                                             bool conserve_delta, int n_max, double tol) {
    if (max_order < 1) {
        throw std::invalid_argument("max order must be at least 1");
    }
    for (size_t i = 0; i < gamma_samples.size(); i++) {
        if (std::abs(gamma_samples[i]) == 0) {
            throw std::invalid_argument("gamma samples must be nonzero");
        }
        for (size_t j = 0; j < i; j++) {
            if (std::abs(gamma_samples[i] - gamma_samples[j]) < 1e-12) {
                throw std::invalid_argument("gamma samples must be distinct");
            }
        }
    }
    NullspaceResult res;
    res.monomials = enumerate_monomials(max_order, conserve_delta);
    res.gamma_samples = gamma_samples;
    const Eigen::Index M = (Eigen::Index)res.monomials.size();

    // Hermitian partner of each monomial: (m,n,p,q) <-> (n,m,q,p).
    std::vector<Eigen::Index> partner(M);
    for (Eigen::Index k = 0; k < M; k++) {
        const auto &x = res.monomials[k];
        MonomialIndex y{x.n, x.m, x.q, x.p};
        partner[k] = std::find(res.monomials.begin(), res.monomials.end(), y) - res.monomials.begin();
    }

    for (cplx g : gamma_samples) {
        int nm = n_max > 0 ? n_max : nmax_for(g) + std::abs(delta0);
        if (!tail_check(g, nm - std::abs(delta0)).ok) {
            throw std::invalid_argument("search: truncation too small, constraint rows dominated by the tail");
        }
        // Pad so that raising operators never run off the end.
        int padded = nm + max_order;
        std::vector<Vec> states;
        for (cplx h : {g, cplx(0, 1) * g}) {
            PairCatParams p = PairCatParams::make(h, delta0, nm);
            StateVector s = pair_coherent_state(p);
            CompositeSpace big = CompositeSpace::uniform(2, padded);
            Vec v = Vec::Zero(big.dim());
            for (size_t i = 0; i < p.space.dim(); i++) {
                v(big.index_of({p.space.occupation(i, 0), p.space.occupation(i, 1)})) = s.amp(i);
            }
            states.push_back(v);
        }
        CompositeSpace big = CompositeSpace::uniform(2, padded);
        SpMat a = annihilation(big, 0).mat, b = annihilation(big, 1).mat;
        SpMat ad = SpMat(a.adjoint()), bd = SpMat(b.adjoint());
        const Eigen::Index D = (Eigen::Index)big.dim();

        Mat A(2 * D, M);
        for (Eigen::Index k = 0; k < M; k++) {
            const auto &x = res.monomials[k];
            for (int s = 0; s < 2; s++) {
                Vec v = states[s];
                for (int i = 0; i < x.q; i++) v = b * v;
                for (int i = 0; i < x.p; i++) v = bd * v;
                for (int i = 0; i < x.n; i++) v = a * v;
                for (int i = 0; i < x.m; i++) v = ad * v;
                A.block(s * D, k, D, 1) = v;
            }
        }
        Eigen::VectorXd scale(M);
        for (Eigen::Index k = 0; k < M; k++) {
            scale(k) = A.col(k).norm();
            if (scale(k) == 0) {
                scale(k) = 1;
            }
            A.col(k) /= scale(k);
        }

        // Count Hermiticity rows.
        std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
        for (Eigen::Index k = 0; k < M; k++) {
            if (partner[k] >= k) {
                pairs.emplace_back(k, partner[k]);
            }
        }
        Eigen::Index herm_rows = 0;
        for (auto [j, k] : pairs) {
            herm_rows += j == k ? 1 : 2;
        }
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(4 * D + herm_rows, 2 * M);
        R.block(0, 0, 2 * D, M) = A.real();
        R.block(0, M, 2 * D, M) = -A.imag();
        R.block(2 * D, 0, 2 * D, M) = A.imag();
        R.block(2 * D, M, 2 * D, M) = A.real();
        Eigen::Index row = 4 * D;
        for (auto [j, k] : pairs) {
            if (j == k) {
                R(row++, M + j) = 1;
                continue;
            }
            // Re f_j = Re f_k and Im f_j = -Im f_k, written for the scaled unknowns.
            double cj = 1 / scale(j), ck = 1 / scale(k), nrm = std::hypot(cj, ck);
            R(row, j) = cj / nrm;
            R(row, k) = -ck / nrm;
            row++;
            R(row, M + j) = cj / nrm;
            R(row, M + k) = ck / nrm;
            row++;
        }

        // Reduce the tall system to its square triangular factor first.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(R);
        Eigen::MatrixXd T = qr.matrixQR().topRows(std::min(R.rows(), R.cols())).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(T, Eigen::ComputeFullV);
        const auto &sv = svd.singularValues();
        double smax = sv.size() ? sv(0) : 0;
        std::vector<Eigen::Index> null_cols;
        double resid = 0;
        for (Eigen::Index i = 0; i < 2 * M; i++) {
            double s = i < sv.size() ? sv(i) : 0;
            if (s < tol * smax) {
                null_cols.push_back(i);
                resid = std::max(resid, s / smax);
            }
        }
        Eigen::MatrixXd Y(2 * M, (Eigen::Index)null_cols.size());
        for (size_t c = 0; c < null_cols.size(); c++) {
            Y.col(c) = svd.matrixV().col(null_cols[c]);
        }
        for (Eigen::Index k = 0; k < M; k++) {
            Y.row(k) /= scale(k);
            Y.row(M + k) /= scale(k);
        }
        res.basis.push_back(orthonormal_columns(Y));
        res.residuals.push_back(resid);
    }

    // Intersection of the sample nullspaces.
    Eigen::MatrixXd U = res.basis.empty() ? Eigen::MatrixXd() : res.basis[0];
    for (size_t s = 1; s < res.basis.size() && U.cols() > 0; s++) {
        if (res.basis[s].cols() == 0) {
            U.resize(U.rows(), 0);
            break;
        }
        Eigen::MatrixXd C = U.transpose() * res.basis[s];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU);
        Eigen::Index keep = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); i++) {
            if (svd.singularValues()(i) > 1 - 1e-6) {
                keep++;
            }
        }
        U = orthonormal_columns(U * svd.matrixU().leftCols(keep));
    }
    res.common = U;
    for (const auto &B : res.basis) {
        int extra = (int)(B.cols() - U.cols());
        res.dependent_dims.push_back(extra);
        res.gamma_dependent = res.gamma_dependent || extra > 0;
    }
    return res;
}

double verify_recursion_identity(cplx gamma, int delta, int n, int m, int n_max) {
    if (std::abs(gamma) == 0) {
        throw std::invalid_argument("recursion identity divides by gamma");
    }
    if (m < 1) {
        throw std::invalid_argument("recursion identity needs m >= 1");
    }
    if (n_max <= 0) {
        n_max = nmax_for(gamma) + n + m + std::abs(delta);
    }
    CompositeSpace sp = CompositeSpace::uniform(2, n_max);
    SpMat ad = creation(sp, 0).mat, bd = creation(sp, 1).mat;
    SpMat P = delta_projector(sp, delta).mat;
    Vec base = coherent_state(sp, {gamma, gamma}).amp;
    auto raise = [&](int k, int l) {
        Vec v = base;
        for (int i = 0; i < l; i++) v = bd * v;
        for (int i = 0; i < k; i++) v = ad * v;
        return Vec(P * v);
    };
    Vec lhs = raise(n, m);
    Vec rhs = raise(n + 1, m - 1) + (double(delta + n - m + 1) / gamma) * raise(n, m - 1);
    return (lhs - rhs).norm() / lhs.norm();
}

}  // namespace paircat
