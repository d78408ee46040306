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

#include <gtest/gtest.h>

#include <cmath>

#include "paircat/paircat.h"

using namespace paircat;

namespace {

// -F^dag F on the block {|n, n + d> : n of parity mu}, built from matrix elements directly.
Eigen::VectorXd block_eigenvalues(double g, int mu, int d, int n_max) {
    std::vector<int> ns;
    for (int n = 0; n + d <= n_max; n++) {
        if ((n % 2 == 0) == (mu > 0)) ns.push_back(n);
    }
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(ns.size(), ns.size());
    for (size_t i = 0; i < ns.size(); i++) {
        int n = ns[i];
        f(i, i) = -std::pow(g, 4);
        if (i + 1 < ns.size()) {
            f(i, i + 1) = std::sqrt((double)(n + 2) * (n + 1) * (n + 2 + d) * (n + 1 + d));
        }
    }
    Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(-f.transpose() * f).eigenvalues();
    return e.reverse();
}

}  // namespace

TEST(stabilizer, code_states_are_most_excited) {
    cplx g(1.3, 0.4);
    for (int d : {0, 1}) {
        CodeFrame fr = code_frame(PairCatParams::make(g, d));
        Operator h = stabilizer_hamiltonian(g, 2.0, fr.params.space);
        double scale = 2.0 * std::pow(std::abs(g), 8);
        EXPECT_LT(h.apply(fr.plus.amp).norm(), 1e-8 * scale);
        EXPECT_LT(h.apply(fr.minus.amp).norm(), 1e-8 * scale);
    }
}

TEST(stabilizer, symmetries) {
    CompositeSpace sp = CompositeSpace::uniform(2, 8);
    Mat h = Mat(stabilizer_hamiltonian(cplx(0.9, 0.3), 1, sp).mat);
    Mat delta = Mat(number(sp, 1).mat - number(sp, 0).mat);
    Mat parity = Mat(parity_projector(sp, 0, 1).mat - parity_projector(sp, 0, -1).mat);
    EXPECT_LT((h * delta - delta * h).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((h * parity - parity * h).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    Mat h0 = Mat(stabilizer_hamiltonian(0.0, 1, sp).mat);
    Mat off = h0;
    off.diagonal().setZero();
    EXPECT_EQ(off.cwiseAbs().maxCoeff(), 0);
}

TEST(stabilizer, block_spectrum_matches_direct_blocks) {
    for (double g2 : {2.0, 4.0}) {
        for (int mu : {1, -1}) {
            for (int d : {0, 2}) {
                SpectrumResult s = block_spectrum(std::sqrt(g2), 1, mu, d);
                Eigen::VectorXd ref = block_eigenvalues(std::sqrt(g2), mu, d, s.n_max);
                ASSERT_EQ(s.eigenvalues.size(), ref.size());
                double scale = std::pow(g2, 4);
                EXPECT_LT((s.eigenvalues - ref).cwiseAbs().maxCoeff(), 1e-9 * scale);
                EXPECT_LE(s.eigenvalues.maxCoeff(), 1e-8 * scale);
                EXPECT_NEAR(s.gap, std::abs(ref[1]), 1e-9 * scale);
                EXPECT_GT(s.top_fidelity, 1 - 1e-6);
            }
        }
    }
}

TEST(stabilizer, parity_splitting_shrinks) {
    double prev = 1e300;
    for (double g2 : {3.0, 4.0, 5.0, 6.0}) {
        double g = std::sqrt(g2);
        double split = parity_gap_degeneracy(g, 1, 0);
        int n = block_spectrum(g, 1, 1, 0).n_max;
        double ref = std::abs(block_eigenvalues(g, 1, 0, n)[1] - block_eigenvalues(g, -1, 0, n)[1]);
        EXPECT_NEAR(split, ref, 1e-8 * std::pow(g2, 4));
        EXPECT_LT(split, prev);
        prev = split;
    }
    EXPECT_GT(parity_gap_degeneracy(0.0, 1, 0, 12), 1);
}

TEST(stabilizer, monomial_enumeration) {
    EXPECT_EQ(enumerate_monomials(2, false).size(), 15u);
    auto c = enumerate_monomials(2, true);
    EXPECT_EQ(c.size(), 5u);
    for (int order : {4, 6}) {
        for (const MonomialIndex &m : enumerate_monomials(order, true)) {
            EXPECT_EQ(m.n + m.p, m.m + m.q);
            EXPECT_EQ(m.order() % 2, 0);
            EXPECT_LE(m.order(), order);
        }
    }
}

TEST(stabilizer, delta_operator_is_gamma_independent) {
    auto samples = default_gamma_samples();
    NullspaceResult r = search_low_order_hamiltonian(2, 0, samples, false);
    for (double res : r.residuals) EXPECT_LT(res, 1e-8);
    std::vector<cplx> f(r.monomials.size(), 0.0), id(r.monomials.size(), 0.0);
    for (size_t k = 0; k < r.monomials.size(); k++) {
        if (r.monomials[k] == MonomialIndex{0, 0, 1, 1}) f[k] = 1;
        if (r.monomials[k] == MonomialIndex{1, 1, 0, 0}) f[k] = -1;
        if (r.monomials[k] == MonomialIndex{0, 0, 0, 0}) id[k] = 1;
    }
    EXPECT_GT((r.common.transpose() * r.pack(f).normalized()).norm(), 1 - 1e-8);
    // The identity does not annihilate the code states.
    EXPECT_LT(r.containment(r.pack(id).normalized()), 1e-6);
    EXPECT_FALSE(r.gamma_dependent);
}

TEST(stabilizer, nullspace_stable_under_cutoff) {
    auto samples = default_gamma_samples();
    NullspaceResult a = search_low_order_hamiltonian(4, 0, samples, true);
    int n0 = 0;
    for (cplx g : samples) n0 = std::max(n0, nmax_for(g));
    NullspaceResult c = search_low_order_hamiltonian(4, 0, samples, true, n0 + 8);
    ASSERT_EQ(a.common.cols(), c.common.cols());
    for (size_t s = 0; s < a.basis.size(); s++) {
        ASSERT_EQ(a.basis[s].cols(), c.basis[s].cols());
        // Largest principal angle between the two subspaces.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.basis[s].transpose() * c.basis[s]);
        double smin = a.basis[s].cols() ? svd.singularValues().minCoeff() : 1;
        EXPECT_LT(std::acos(std::min(1.0, smin)), 1e-6);
    }
}

TEST(stabilizer, recursion_identity) {
    EXPECT_LT(verify_recursion_identity(1.0, 0, 0, 1), 1e-10);
    EXPECT_LT(verify_recursion_identity(2.0, 2, 1, 2), 1e-10);
    EXPECT_LT(verify_recursion_identity(cplx(1, 0.7), 1, 1, 2), 1e-10);
    EXPECT_THROW(verify_recursion_identity(0.0, 0, 0, 1), std::invalid_argument);
}
