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

#include "paircat/dynamics.h"

#include <gtest/gtest.h>

#include <cmath>

#include "paircat/paircat.h"

using namespace paircat;

namespace {

Mat projector(const Vec &v) {
    return v * v.adjoint();
}

// Stabilizer jump restricted to one delta sector of a two-mode space.
struct Sector {
    CompositeSpace space;
    Subspace sub;
    SpMat f;
};

Sector sector(cplx g, int delta, int n_max) {
    Sector s;
    s.space = CompositeSpace::uniform(2, n_max);
    s.sub = delta_sector(s.space, {delta});
    Operator a = annihilation(s.space, 0), b = annihilation(s.space, 1);
    SpMat f = (a * a * b * b).mat;
    SpMat id = identity(s.space).mat;
    f -= std::pow(g, 4) * id;
    s.f = s.sub.restrict(f);
    return s;
}

}  // namespace

TEST(dynamics, idle_is_identity) {
    CompositeSpace sp = CompositeSpace::uniform(2, 3);
    EvolutionSpec ev;
    ev.t_final = 1;
    ev.dt = 0.1;
    ev.hamiltonian.add(SpMat(identity(sp).mat * 0.0));
    Mat rho = projector(coherent_state(sp, {0.4, cplx(0, 0.3)}).amp);
    EXPECT_LT((evolve_master(rho, ev) - rho).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(dynamics, single_mode_loss_decay) {
    CompositeSpace sp({ModeSpace{16}});
    const double k1 = 0.3, t = 2;
    EvolutionSpec ev;
    ev.t_final = t;
    ev.hamiltonian.add(SpMat(number(sp, 0).mat * 0.7));
    ev.jumps.push_back({k1, TimeOperator(annihilation(sp, 0).mat), "a"});
    Mat rho0 = projector(coherent_state(sp, {1.2}).amp);
    Mat n = Mat(number(sp, 0).mat);
    double n0 = (n * rho0).trace().real();
    Mat rho = evolve_master(rho0, ev);
    EXPECT_NEAR((n * rho).trace().real(), n0 * std::exp(-k1 * t), 1e-6);
    EXPECT_NEAR(std::abs(rho.trace() - 1.0), 0, 1e-10);
    // Exact exponential of the Liouvillian as a second route.
    Mat exact = evolve_master_exact(rho0, ev);
    EXPECT_LT((rho - exact).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(dynamics, step_size_failure_is_reported) {
    CompositeSpace sp({ModeSpace{10}});
    EvolutionSpec ev;
    ev.t_final = 5;
    ev.dt = 1;
    ev.hamiltonian.add(SpMat(number(sp, 0).mat * 50.0));
    Mat rho0 = projector(coherent_state(sp, {1.0}).amp);
    try {
        evolve_master(rho0, ev);
        FAIL() << "expected StepSizeError";
    } catch (const StepSizeError &e) {
        EXPECT_LT(e.suggested_dt, 1);
    }
}

TEST(dynamics, code_space_is_decoherence_free) {
    cplx g = 1.0;
    for (int d : {0, 1}) {
        Sector s = sector(g, d, 14);
        EvolutionSpec ev;
        ev.t_final = 5;
        ev.jumps.push_back({1.0, TimeOperator(s.f), "F"});
        auto p = PairCatParams::make(g, d, 14);
        Vec psi = s.sub.restrict(pair_coherent_state(p).amp);
        Mat rho = evolve_master(projector(psi), ev);
        EXPECT_GT(psi.dot(rho * psi).real(), 1 - 1e-8);
    }
}

TEST(dynamics, stabilizer_conserves_delta_and_parity) {
    CompositeSpace sp = CompositeSpace::uniform(2, 4);
    cplx g(0.8, 0.2);
    Operator a = annihilation(sp, 0), b = annihilation(sp, 1);
    SpMat f = (a * a * b * b).mat;
    SpMat id = identity(sp).mat;
    f -= std::pow(g, 4) * id;
    EvolutionSpec ev;
    ev.t_final = 0.5;
    ev.jumps.push_back({1.0, TimeOperator(f), "F"});
    Mat m = Mat::Random(sp.dim(), sp.dim());
    Mat rho0 = m * m.adjoint();
    rho0 /= rho0.trace();
    Mat rho = evolve_master(rho0, ev);
    Mat delta = Mat(number(sp, 1).mat - number(sp, 0).mat);
    Mat parity = Mat(parity_projector(sp, 0, 1).mat - parity_projector(sp, 0, -1).mat);
    EXPECT_NEAR(std::abs((delta * rho).trace() - (delta * rho0).trace()), 0, 1e-8);
    EXPECT_NEAR(std::abs((parity * rho).trace() - (parity * rho0).trace()), 0, 1e-8);
    EXPECT_NEAR(std::abs(rho.trace() - 1.0), 0, 1e-8);
    EXPECT_LT((rho - rho.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(rho).eigenvalues().minCoeff(), -1e-6);
}

TEST(dynamics, steady_state_reaches_code_states) {
    cplx g = 1.0;
    const int N = 14, d = 1;
    Sector s = sector(g, d, N);
    EvolutionSpec ev;
    ev.t_final = 200;
    ev.jumps.push_back({1.0, TimeOperator(s.f), "F"});
    CodeFrame fr = code_frame(PairCatParams::make(g, d, N));
    Vec plus = s.sub.restrict(fr.plus.amp), minus = s.sub.restrict(fr.minus.amp);
    Vec f0 = s.sub.restrict(fock_state(s.space, {0, d}).amp);
    Vec f1 = s.sub.restrict(fock_state(s.space, {1, d + 1}).amp);
    Mat r = steady_state(projector(f0), ev, 1e-10);
    EXPECT_GT(plus.dot(r * plus).real(), 0.999);
    r = steady_state(projector(f1), ev, 1e-10);
    EXPECT_GT(minus.dot(r * minus).real(), 0.999);
    r = steady_state(projector(plus), ev, 1e-10);
    EXPECT_GT(plus.dot(r * plus).real(), 1 - 1e-10);
}

TEST(dynamics, stiff_and_explicit_propagators_agree) {
    Sector s = sector(0.9, 0, 8);
    EvolutionSpec ev;
    ev.t_final = 1;
    SpMat ab = s.sub.restrict(SpMat(annihilation(s.space, 0).mat * annihilation(s.space, 1).mat));
    ev.hamiltonian.add(SpMat(ab + SpMat(ab.adjoint())) * 0.2, [](double t) { return cplx(std::cos(t), 0); });
    ev.jumps.push_back({1.0, TimeOperator(s.f), "F"});
    ev.injections.push_back({0.4, ab, "ab"});
    Mat psi0 = Mat::Zero(s.sub.dim(), 2);
    psi0(0, 0) = 1;
    psi0(2, 1) = 1;
    Mat ref = propagate(psi0, ev);
    Mat stiff = propagate_stiff(psi0, ev, 2e-4);
    EXPECT_LT((ref - stiff).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(dynamics, magnus_matches_rk4) {
    CompositeSpace sp({ModeSpace{8}});
    SpMat a = annihilation(sp, 0).mat;
    EvolutionSpec ev;
    ev.t_final = 2;
    ev.dt = 1e-3;
    ev.hamiltonian.add(SpMat(number(sp, 0).mat));
    ev.hamiltonian.add(SpMat(a + SpMat(a.adjoint())) * 0.3, [](double t) { return cplx(std::sin(3 * t), 0); });
    Mat psi0 = coherent_state(sp, {0.5}).amp;
    Mat ref = propagate(psi0, ev);
    Mat mag = evolve_magnus(psi0, ev.hamiltonian, ev.t_final, 400);
    EXPECT_LT((ref - mag).norm(), 1e-7);
}

TEST(dynamics, unitary_trajectory) {
    CompositeSpace sp({ModeSpace{8}});
    SpMat a = annihilation(sp, 0).mat;
    EvolutionSpec ev;
    ev.t_final = 3;
    ev.hamiltonian.add(SpMat(SpMat(a + SpMat(a.adjoint())) * 0.4));
    Vec psi0 = fock_state(sp, {1}).amp;
    TrajectoryResult tr = evolve_trajectory(psi0, ev, nullptr, 3);
    EXPECT_NEAR(tr.psi.norm(), 1, 1e-8);
    EXPECT_TRUE(tr.record.jumps.empty());
    Vec ref = propagate(Mat(psi0), ev).col(0);
    EXPECT_GT(std::norm(ref.dot(tr.psi)), 1 - 1e-6);
}

namespace {

struct LossSetup {
    CompositeSpace space;
    EvolutionSpec ev;
    Vec psi0;
    SpMat delta;
};

LossSetup loss_setup(double k1, double t) {
    LossSetup s;
    s.space = CompositeSpace::uniform(2, 9);
    s.ev.t_final = t;
    s.ev.jumps.push_back({k1, TimeOperator(annihilation(s.space, 0).mat), "a"});
    s.ev.jumps.push_back({k1, TimeOperator(annihilation(s.space, 1).mat), "b"});
    s.psi0 = pair_coherent_state(PairCatParams::make(1.0, 1, 9)).amp;
    s.delta = number(s.space, 1).mat - number(s.space, 0).mat;
    return s;
}

}  // namespace

TEST(dynamics, loss_jump_count_matches_master_equation) {
    const double k1 = 0.2, t = 1.5;
    LossSetup s = loss_setup(k1, t);
    // Every photon lost is one jump: E[count] = <N>(0) - <N>(t) from the master equation.
    SpMat ntot = number(s.space, 0).mat + number(s.space, 1).mat;
    Mat rho0 = projector(s.psi0);
    Mat rho = evolve_master(rho0, s.ev);
    double expect = (Mat(ntot) * rho0).trace().real() - (Mat(ntot) * rho).trace().real();
    const int M = 600;
    double sum = 0, sum2 = 0;
    for (int k = 0; k < M; k++) {
        double c = (double)evolve_trajectory(s.psi0, s.ev, nullptr, 1000 + k).record.jumps.size();
        sum += c;
        sum2 += c * c;
    }
    double mean = sum / M, var = sum2 / M - mean * mean;
    EXPECT_LT(std::abs(mean - expect), 3 * std::sqrt(var / M)) << mean << " vs " << expect;
}

TEST(dynamics, delta_monitor_tracks_losses) {
    LossSetup s = loss_setup(0.5, 3);
    MonitorSpec mon{0.1, s.delta, {}};
    for (uint64_t seed = 1; seed <= 20; seed++) {
        TrajectoryResult tr = evolve_trajectory(s.psi0, s.ev, &mon, seed);
        ASSERT_FALSE(tr.record.outcomes.empty());
        for (const auto &o : tr.record.outcomes) {
            int expect = 1;
            for (const auto &[tj, idx] : tr.record.jumps) {
                if (tj <= o.time) expect += idx == 0 ? 1 : -1;
            }
            EXPECT_EQ((int)std::lround(o.value), expect) << "seed " << seed << " t " << o.time;
        }
    }
}

TEST(dynamics, trajectories_are_deterministic) {
    LossSetup s = loss_setup(0.5, 3);
    MonitorSpec mon{0.2, s.delta, {}};
    TrajectoryResult a = evolve_trajectory(s.psi0, s.ev, &mon, 42);
    TrajectoryResult b = evolve_trajectory(s.psi0, s.ev, &mon, 42);
    EXPECT_TRUE(a.record == b.record);
    EXPECT_EQ((a.psi - b.psi).norm(), 0);
}

TEST(dynamics, monitor_must_be_diagonal) {
    LossSetup s = loss_setup(0.5, 1);
    MonitorSpec mon{0.2, annihilation(s.space, 0).mat, {}};
    EXPECT_THROW(evolve_trajectory(s.psi0, s.ev, &mon, 1), std::invalid_argument);
}
