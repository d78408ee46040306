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

#include "paircat/paircat.h"

#include <gtest/gtest.h>

#include <cmath>

using namespace paircat;

namespace {

Operator ab2(const CompositeSpace &sp) {
    Operator a = annihilation(sp, 0), b = annihilation(sp, 1);
    return a * a * b * b;
}

double fidelity(const Vec &x, const Vec &y) {
    return std::norm(x.dot(y)) / (x.squaredNorm() * y.squaredNorm());
}

}  // namespace

TEST(paircat, bessel_against_std) {
    for (int nu = 0; nu <= 5; nu++) {
        for (double x : {0.1, 1.0, 4.0, 12.0}) {
            EXPECT_NEAR(bessel_i(nu, x) / std::cyl_bessel_i((double)nu, x), 1, 1e-13);
            // The alternating series cancels down from e^x-sized terms.
            EXPECT_NEAR(bessel_j(nu, x), std::cyl_bessel_j((double)nu, x), 1e-16 * std::exp(x));
        }
    }
}

TEST(paircat, norm_delta_values) {
    EXPECT_DOUBLE_EQ(norm_delta(0.0, 0), 1);
    EXPECT_DOUBLE_EQ(norm_delta(0.0, 2), 0);
    double sum = 0, f = 1;
    for (int n = 0; n <= 60; n++) {
        if (n > 0) f *= n;
        sum += std::exp(-2.0) / (f * f);
    }
    EXPECT_NEAR(norm_delta(1.0, 0) / sum, 1, 1e-13);
    cplx g = 2;
    CompositeSpace sp = CompositeSpace::uniform(2, nmax_for(g));
    Vec c = coherent_state(sp, {g, g}).amp;
    double direct = c.dot(delta_projector(sp, 3).apply(c)).real();
    EXPECT_NEAR(norm_delta(g, 3) / direct, 1, 1e-10);
}

TEST(paircat, pair_coherent_state) {
    StateVector z = pair_coherent_state(PairCatParams::make(0.0, 2));
    EXPECT_NEAR(std::abs(z.amp[(Eigen::Index)z.space.index_of({0, 2})]), 1, 1e-15);
    for (cplx g : {cplx(1.2, 0), cplx(0.9, 0.8)}) {
        for (int d : {0, 1, 2}) {
            auto p = PairCatParams::make(g, d);
            Vec s = pair_coherent_state(p).amp;
            EXPECT_NEAR(s.norm(), 1, 1e-12);
            EXPECT_LT((ab2(p.space).apply(s) - std::pow(g, 4) * s).norm(), 1e-8 * std::pow(std::abs(g), 4));
            Operator a = annihilation(p.space, 0);
            Vec ak = s;
            for (int k = 1; k <= 2; k++) {
                ak = a.apply(ak);
                Vec next = pair_coherent_state(PairCatParams::make(g, d + k, p.space.modes[0].n_max)).amp;
                Vec expect = std::pow(g, k) * std::sqrt(norm_delta(g, d + k) / norm_delta(g, d)) * next;
                EXPECT_LT((ak - expect).norm(), 1e-9) << d << " " << k;
            }
        }
    }
}

TEST(paircat, code_frame_structure) {
    for (int d : {0, 1, 3}) {
        CodeFrame fr = code_frame(PairCatParams::make(cplx(1.5, 0.3), d));
        EXPECT_NEAR(std::abs(fr.plus.amp.dot(fr.minus.amp)), 0, 1e-15);
        EXPECT_NEAR(fr.plus.norm(), 1, 1e-10);
        EXPECT_NEAR(fr.minus.norm(), 1, 1e-10);
        EXPECT_NEAR((fr.zero.amp - (fr.plus.amp + fr.minus.amp) / std::sqrt(2.0)).norm(), 0, 1e-14);
        EXPECT_NEAR((fr.one.amp - (fr.plus.amp - fr.minus.amp) / std::sqrt(2.0)).norm(), 0, 1e-14);
        EXPECT_NEAR((fr.x.apply(fr.plus.amp) - fr.plus.amp).norm(), 0, 1e-12);
        EXPECT_NEAR((fr.x.apply(fr.minus.amp) + fr.minus.amp).norm(), 0, 1e-12);
        EXPECT_NEAR((fr.z.apply(fr.zero.amp) - fr.zero.amp).norm(), 0, 1e-12);
        Mat y = Mat(fr.y.mat), ixz = cplx(0, 1) * Mat(fr.x.mat) * Mat(fr.z.mat);
        EXPECT_LT((y - ixz).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(fr.r, std::sqrt(fr.norm_minus / fr.norm_plus), 1e-15);
        // Normalizations from the Bessel closed form.
        double x = 2 * std::norm(fr.params.gamma);
        EXPECT_NEAR(fr.norm_plus / (std::exp(-x) * (std::cyl_bessel_i(d, x) + std::cyl_bessel_j(d, x)) / 2), 1, 1e-12);
        EXPECT_NEAR(fr.phi, x - (2 * d + 1) * 3.14159265358979323846 / 4, 1e-15);
    }
}

TEST(paircat, small_gamma_limit) {
    for (int d : {0, 2}) {
        CodeFrame fr = code_frame(PairCatParams::make(1e-3, d));
        EXPECT_GT(fidelity(fr.plus.amp, fock_state(fr.params.space, {0, d}).amp), 1 - 1e-6);
        EXPECT_GT(fidelity(fr.minus.amp, fock_state(fr.params.space, {1, d + 1}).amp), 1 - 1e-6);
    }
    CodeFrame z = code_frame(PairCatParams::make(0.0, 1));
    EXPECT_GT(fidelity(z.minus.amp, fock_state(z.params.space, {1, 2}).amp), 1 - 1e-12);
}

TEST(paircat, rotated_overlap_decay) {
    std::vector<double> x, y;
    for (double g2 = 2; g2 <= 6.001; g2 += 0.5) {
        cplx g = std::sqrt(g2);
        auto p = PairCatParams::make(g, 0);
        Vec s = pair_coherent_state(p).amp;
        Vec r = pair_coherent_state(PairCatParams::make(g * cplx(0, 1), 0, p.space.modes[0].n_max)).amp;
        double ov = std::norm(r.dot(s));
        double bessel = std::pow(std::cyl_bessel_j(0, 2 * g2) / std::cyl_bessel_i(0, 2 * g2), 2);
        EXPECT_NEAR(ov / bessel, 1, 1e-8);
        x.push_back(g2);
        y.push_back(std::log(ov));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); i++) {
        mx += x[i] / x.size();
        my += y[i] / y.size();
    }
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); i++) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    EXPECT_NEAR(sxy / sxx, -4, 0.4);
}

TEST(paircat, z_basis_and_asymptotic_form) {
    cplx g = std::sqrt(6.0);
    for (int d : {0, 1, 2}) {
        auto p = PairCatParams::make(g, d);
        CodeFrame fr = code_frame(p);
        Vec s = pair_coherent_state(p).amp;
        EXPECT_GT(fidelity(fr.zero.amp, s), 0.999);
        Vec r = pair_coherent_state(PairCatParams::make(g * cplx(0, 1), d, p.space.modes[0].n_max)).amp;
        cplx ph = std::pow(cplx(0, -1), d);
        EXPECT_LT((fr.plus.amp - (s + ph * r) / std::sqrt(2.0)).norm(), 1e-3);
        EXPECT_LT((fr.minus.amp - (s - ph * r) / std::sqrt(2.0)).norm(), 1e-3);
    }
}

TEST(paircat, negative_delta_is_mode_swap) {
    cplx g(1.3, 0.2);
    CodeFrame pos = code_frame(PairCatParams::make(g, 2));
    CodeFrame neg = code_frame(PairCatParams::make(g, -2, pos.params.space.modes[0].n_max));
    const CompositeSpace &sp = pos.params.space;
    Vec swapped(pos.plus.amp.size());
    for (size_t i = 0; i < sp.dim(); i++) {
        swapped[(Eigen::Index)sp.index_of({sp.occupation(i, 1), sp.occupation(i, 0)})] = pos.minus.amp[(Eigen::Index)i];
    }
    EXPECT_GT(fidelity(swapped, neg.minus.amp), 1 - 1e-12);
    // Parity of |-> is read from mode b.
    EXPECT_NEAR(parity_projector(sp, 1, -1).apply(neg.minus.amp).norm(), 1, 1e-12);
}

TEST(paircat, pauli_projection) {
    cplx g(1.2, 0.5);
    for (int d : {0, 1}) {
        CodeFrame fr = code_frame(PairCatParams::make(g, d));
        const CompositeSpace &sp = fr.params.space;
        auto id = pauli_project(identity(sp), fr);
        EXPECT_NEAR(std::abs(id[0] - 1.0), 0, 1e-12);
        for (int k = 1; k < 4; k++) EXPECT_NEAR(std::abs(id[k]), 0, 1e-12);

        auto c = pauli_project(annihilation(sp, 0) * annihilation(sp, 1), fr);
        cplx g2 = g * g;
        EXPECT_NEAR(std::abs(c[3] - g2 * (fr.r + 1 / fr.r) / 2.0), 0, 1e-10);
        EXPECT_NEAR(std::abs(c[2] - cplx(0, 1) * g2 * (fr.r - 1 / fr.r) / 2.0), 0, 1e-10);
        EXPECT_NEAR(std::abs(c[0]) + std::abs(c[1]), 0, 1e-10);

        auto n = pauli_project(number(sp, 0), fr);
        // a Q_mu |g,g> = g Q_{-mu}^{(d+1)} |g,g>, so <n_a>_mu = |g|^2 N_{-mu,d+1} / N_{mu,d}.
        double x = 2 * std::norm(g);
        auto npm = [&](int dd, int mu) { return std::cyl_bessel_i(dd, x) + mu * std::cyl_bessel_j(dd, x); };
        double np = std::norm(g) * npm(d + 1, -1) / npm(d, 1), nm = std::norm(g) * npm(d + 1, 1) / npm(d, -1);
        EXPECT_NEAR(n[0].real(), (np + nm) / 2, 1e-10);
        EXPECT_NEAR(n[1].real(), (np - nm) / 2, 1e-10);
        EXPECT_LT(std::abs(n[1]), 5 * std::norm(g) * std::exp(-2 * std::norm(g)));
        EXPECT_NEAR(std::abs(n[2]) + std::abs(n[3]), 0, 1e-10);
    }
}
