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

#include "paircat/gates.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "paircat/dynamics.h"

namespace paircat {

namespace {

constexpr double kPi = 3.14159265358979323846;

SpMat sp_identity(int d) {
    SpMat m(d, d);
    m.setIdentity();
    return m;
}

// Block operator with `op` on pair j of a product of sectors (first pair fastest).
SpMat on_pair(const std::vector<PairSector> &secs, int j, const SpMat &op) {
    std::vector<SpMat> f;
    for (int k = 0; k < (int)secs.size(); k++) {
        f.push_back(k == j ? op : sp_identity(secs[k].dim()));
    }
    return tensor(f);
}

SpMat stabilizer_jump(const PairSector &s, cplx gamma) {
    cplx g2 = gamma * gamma;
    return sector_a2b2(s) - g2 * g2 * sp_identity(s.dim());
}

Mat kron(const Mat &a, const Mat &b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

// vec(U^dag X U) as a superoperator.
Mat undo(const Mat &u) {
    return kron(u.transpose(), u.adjoint());
}

Mat z_rotation(double theta) {
    Mat u = Mat::Zero(2, 2);
    u(0, 0) = std::polar(1.0, theta / 2);
    u(1, 1) = std::polar(1.0, -theta / 2);
    return u;
}

Mat superop_of(const Mat &k) {
    return kron(k.conjugate(), k);
}

}  // namespace

const char *gate_name(GateKind k) {
    switch (k) {
        case GateKind::Prepare:
            return "prepare";
        case GateKind::MeasureX:
            return "measure_x";
        case GateKind::Z:
            return "Z";
        case GateKind::ZZ:
            return "ZZ";
        case GateKind::X:
            return "X";
        case GateKind::CNOT:
            return "CNOT";
        case GateKind::Toffoli:
            return "Toffoli";
    }
    return "?";
}

const char *scheme_name(Scheme s) {
    return s == Scheme::Dissipative ? "dissipative" : "hamiltonian";
}

GateSpec resolve(const GateSpec &in) {
    GateSpec s = in;
    double g2 = std::norm(s.gamma);
    if (s.kappa <= 0) {
        throw std::invalid_argument("gate spec: kappa (or K) must be positive");
    }
    if (s.kappa1 < 0) {
        throw std::invalid_argument("gate spec: kappa1 must be non-negative");
    }
    if (s.kind == GateKind::Z || s.kind == GateKind::ZZ) {
        double scale = s.kind == GateKind::Z ? 4 * g2 : 4 * g2 * g2;
        s.eps = std::abs(s.eps);
        if (s.eps == 0 && s.T > 0) {
            s.eps = std::abs(s.theta) / (scale * s.T);
        } else if (s.T <= 0 && s.eps > 0) {
            s.T = std::abs(s.theta) / (scale * s.eps);
        } else if (s.T > 0 && s.eps > 0) {
            s.theta = scale * s.eps * s.T;
        }
        if (s.T <= 0 && s.theta == 0) {
            throw std::invalid_argument("gate spec: theta = 0 needs an explicit T");
        }
        if (s.eps > 0.1 * s.kappa) {
            warn("gate spec: drive strength is not small against the stabilization rate (Zeno condition)");
        }
    }
    if (s.T <= 0 && s.kind != GateKind::MeasureX) {
        throw std::invalid_argument("gate spec: T must be positive");
    }
    if (s.n_max < 0) {
        s.n_max = dynamics_nmax(s.gamma);
    }
    if (s.delta_span < 0) {
        throw std::invalid_argument("gate spec: delta_span must be non-negative");
    }
    return s;
}

double GateResult::p(const std::string &label) const {
    for (const auto &[k, v] : probabilities) {
        if (k == label) {
            return v;
        }
    }
    throw std::out_of_range("GateResult: no probability for " + label);
}

PauliProcess GateResult::process() const {
    if (num_qubits != 1) {
        throw std::logic_error("GateResult::process: single-qubit results only");
    }
    PauliProcess p;
    p.r = chi;
    p.leakage = leakage;
    return p;
}

void finish_result(GateResult &r, const Mat &superop, const Mat &target, double leakage) {
    int nq = 0;
    while ((1 << nq) < target.rows()) {
        nq++;
    }
    r.num_qubits = nq;
    r.superop = superop;
    r.target = target;
    r.leakage = leakage;
    r.chi = pauli_chi(undo(target) * superop, nq);
    r.probabilities.clear();
    double kept = 0;
    for (int j = 0; j < r.chi.rows(); j++) {
        kept += r.chi(j, j).real();
        if (j > 0) {
            r.probabilities.emplace_back(pauli_label(j, nq), std::max(0.0, r.chi(j, j).real()));
        }
    }
    r.fidelity = kept > 0 ? r.chi(0, 0).real() / kept : 0;
    double lost = pair_tail(r.spec.gamma, r.spec.delta, r.spec.n_max);
    TailCheck tc{lost, lost < 1e-10};
    r.n_max = r.spec.n_max;
    r.tail_lost = tc.lost;
    r.tail_ok = tc.ok;
}

// ---------------------------------------------------------------------------------------
// Z and ZZ rotations

namespace {

SectorModel rotation_model(const GateSpec &s, int pairs) {
    SectorModel m;
    m.num_pairs = pairs;
    m.n_max = s.n_max;
    m.gamma.assign(pairs, s.gamma);
    m.delta0.assign(pairs, s.delta);
    m.delta_span = s.kappa1 > 0 ? s.delta_span : 0;
    m.kappa1 = s.kappa1;
    m.t_final = s.T;
    m.dtau = s.dtau;
    m.monitored.assign(pairs, s.dtau > 0);
    m.substeps = std::max(1, s.substeps);
    m.implicit_dt = std::min(0.05, s.T / 40);
    return m;
}

}  // namespace

GateResult gate_z_trajectories(const GateSpec &s);

GateResult gate_z(const GateSpec &in) {
    GateSpec s = in;
    s.kind = GateKind::Z;
    s = resolve(s);
    if (s.trajectories > 0) {
        return gate_z_trajectories(s);
    }
    const cplx phase = std::polar(1.0, -std::arg(s.gamma * s.gamma));
    const double eps = -s.eps;
    SectorModel m = rotation_model(s, 1);
    m.generator = [&](const std::vector<int> &d) {
        PairSector sec{d[0], s.n_max};
        SpMat ab = sector_ab(sec) * phase;
        SectorGenerator g;
        g.h = eps * (ab + SpMat(ab.adjoint()));
        SpMat f = stabilizer_jump(sec, s.gamma);
        if (s.scheme == Scheme::Dissipative) {
            g.jumps.emplace_back(s.kappa, f);
        } else {
            g.h -= s.kappa * SpMat(f.adjoint() * f);
        }
        return g;
    };
    SectorChannel ch = run_sector_channel(m);
    GateResult r;
    r.spec = s;
    finish_result(r, ch.superop, z_rotation(s.theta), ch.leakage);
    if (ch.dropped > 1e-6) {
        r.flags.push_back("loss beyond the kept delta window");
    }
    return r;
}

namespace {

// exp(h L) for a single pair, L = -i[H, .] + k D[F], column-stacked on the pair's d x d block.
Mat pair_propagator(const SpMat &f, double kappa, Scheme scheme, double h) {
    Mat F = Mat(f), FF = F.adjoint() * F;
    const int d = (int)F.rows();
    Mat id = Mat::Identity(d, d);
    Mat l;
    if (scheme == Scheme::Dissipative) {
        l = kappa * (kron(F.conjugate(), F) - 0.5 * kron(id, FF) - 0.5 * kron(FF.transpose(), id));
    } else {
        Mat H = -kappa * FF;
        l = cplx(0, -1) * (kron(id, H) - kron(H.transpose(), id));
    }
    return Mat(l * h).exp();
}

}  // namespace

GateResult gate_zz(const GateSpec &in) {
    GateSpec s = in;
    s.kind = GateKind::ZZ;
    if (s.n_max < 0) {
        s.n_max = dynamics_nmax(s.gamma, 1e-9, 0);  // the pair product squares the cost
    }
    s = resolve(s);
    const double eps = -s.eps;
    const PairSector sec{s.delta, s.n_max};
    const int d = sec.dim(), D = d * d;
    if (D > 2000) {
        throw std::length_error("gate_zz: pair product over budget; lower n_max");
    }
    // Strang steps; two step sizes combined by Richardson extrapolation.
    const double g6 = std::pow(std::norm(s.gamma), 3);
    const int steps = s.steps > 0 ? s.steps : std::max(40, (int)std::ceil(s.T / std::min(0.05, 0.8 / (s.kappa * g6))));
    std::vector<PairSector> secs{sec, sec};
    SpMat x = on_pair(secs, 0, sector_ab(sec)) * SpMat(on_pair(secs, 1, sector_ab(sec)).adjoint());
    Mat hc = eps * Mat(x + SpMat(x.adjoint()));
    SpMat f = stabilizer_jump(sec, s.gamma);

    // rho(k1 + d k2, b1 + d b2) is held as R(k1 + d b1, k2 + d b2) for the pair-local maps.
    auto to_r = [&](const Mat &rho) {
        Mat r(D, D);
        for (int b2 = 0; b2 < d; b2++)
            for (int b1 = 0; b1 < d; b1++)
                for (int k2 = 0; k2 < d; k2++)
                    for (int k1 = 0; k1 < d; k1++) r(k1 + d * b1, k2 + d * b2) = rho(k1 + d * k2, b1 + d * b2);
        return r;
    };
    auto from_r = [&](const Mat &r) {
        Mat rho(D, D);
        for (int b2 = 0; b2 < d; b2++)
            for (int b1 = 0; b1 < d; b1++)
                for (int k2 = 0; k2 < d; k2++)
                    for (int k1 = 0; k1 < d; k1++) rho(k1 + d * k2, b1 + d * b2) = r(k1 + d * b1, k2 + d * b2);
        return rho;
    };

    Mat cb = sector_logical_basis(s.gamma, sec);
    Vec plus = sector_code_state(s.gamma, sec, 1);
    Vec in0 = kron(plus, plus);
    auto evolve = [&](int n) {
        const double h = s.T / n;
        Mat uc = Mat(cplx(0, -h) * hc).exp();
        Mat eh = pair_propagator(f, s.kappa, s.scheme, h / 2), ef = eh * eh;
        Mat r = to_r(Mat(in0 * in0.adjoint()));
        r = eh * r * eh.transpose();
        for (int k = 0; k < n; k++) {
            Mat rho = from_r(r);
            rho = uc * rho * uc.adjoint();
            r = to_r(rho);
            const Mat &e = k + 1 < n ? ef : eh;
            r = e * r * e.transpose();
        }
        return from_r(r);
    };
    Mat rho = (4.0 * evolve(2 * steps) - evolve(steps)) / 3.0;
    Mat v = kron(cb, cb);  // logical |x1 x2>, pair 0 fastest
    Mat rl = v.adjoint() * rho * v;
    Mat u = Mat::Zero(4, 4);
    for (int q = 0; q < 4; q++) {
        int z = ((q & 1) ? -1 : 1) * ((q & 2) ? -1 : 1);
        u(q, q) = std::polar(1.0, z * s.theta / 2);
    }
    rl = u.adjoint() * rl * u;
    double kept = rl.trace().real();
    // X-basis populations of the undone output give the Z-type error probabilities.
    Mat hh = Mat::Ones(2, 2) / std::sqrt(2.0);
    hh(1, 1) = -hh(1, 1);
    Mat xb = kron(hh, hh);
    Mat px = xb.adjoint() * rl * xb;
    double pz[4];
    for (int q = 0; q < 4; q++) {
        pz[q] = std::max(0.0, px(q, q).real()) / kept;
    }
    // pz[q]: bit 0 set = qubit 0 flipped (Z on qubit 0), bit 1 = qubit 1.
    if (s.kappa1 > 0) {
        // Loss acts on each pair on its own; compose with the idle loss channel of one pair.
        GateSpec idle = s;
        idle.kind = GateKind::Z;
        idle.eps = 0;
        idle.theta = 0;
        GateResult one = gate_z(idle);
        double pl = one.p("Z");
        double q0[4];
        for (int q = 0; q < 4; q++) {
            q0[q] = 0;
        }
        for (int q = 0; q < 4; q++) {
            for (int e = 0; e < 4; e++) {
                double w = ((e & 1) ? pl : 1 - pl) * ((e & 2) ? pl : 1 - pl);
                q0[q ^ e] += pz[q] * w;
            }
        }
        for (int q = 0; q < 4; q++) {
            pz[q] = q0[q];
        }
    }
    Mat sup = Mat::Zero(16, 16);
    for (int q = 0; q < 4; q++) {
        Mat z = pauli_string(3, 1), id2 = Mat::Identity(2, 2);
        Mat pq = kron((q & 2) ? z : id2, (q & 1) ? z : id2);
        sup += pz[q] * superop_of(Mat(u * pq));
    }
    GateResult res;
    res.spec = s;
    finish_result(res, sup, u, std::max(0.0, 1 - kept));
    res.flags.push_back("Z-type error populations only (X-basis input)");
    if (s.kappa1 > 0) {
        res.flags.push_back("loss composed per pair from the idle channel");
    }
    return res;
}

// Quantum-jump ensemble for the Z gate on a window of delta sectors of the two-mode space.
GateResult gate_z_trajectories(const GateSpec &s) {
    const int N = s.n_max;
    CompositeSpace space = CompositeSpace::uniform(2, N);
    std::vector<int> window;
    int span = s.kappa1 > 0 ? s.delta_span : 0;
    for (int d = s.delta - span; d <= s.delta + span; d++) {
        if (std::abs(d) <= N) {
            window.push_back(d);
        }
    }
    Subspace sub = delta_sector(space, window);
    Operator a = annihilation(space, 0), b = annihilation(space, 1);
    SpMat ab = sub.restrict(SpMat(a.mat * b.mat)) * std::polar(1.0, -std::arg(s.gamma * s.gamma));
    cplx g2 = s.gamma * s.gamma;
    SpMat f = sub.restrict(SpMat(a.mat * a.mat * b.mat * b.mat)) - g2 * g2 * sp_identity((int)sub.dim());

    EvolutionSpec ev;
    ev.t_final = s.T;
    ev.hamiltonian.add(-s.eps * (ab + SpMat(ab.adjoint())));
    if (s.scheme == Scheme::Dissipative) {
        ev.jumps.push_back({s.kappa, TimeOperator(f), "F"});
    } else {
        ev.hamiltonian.add(-s.kappa * SpMat(f.adjoint() * f));
    }
    if (s.kappa1 > 0) {
        ev.jumps.push_back({s.kappa1, TimeOperator(sub.restrict(a.mat)), "a"});
        ev.jumps.push_back({s.kappa1, TimeOperator(sub.restrict(b.mat)), "b"});
    }
    SpMat delta_op = sub.restrict(SpMat(number(space, 1).mat - number(space, 0).mat));
    MonitorSpec mon{s.dtau, delta_op, {}};

    // Logical bases per sector, lifted into the window.
    std::map<int, Mat> basis;
    for (int d : window) {
        CodeFrame fr = code_frame(PairCatParams::make(s.gamma, d, N));
        Mat lb = fr.logical_basis();
        Mat r(sub.dim(), 2);
        for (int c = 0; c < 2; c++) {
            r.col(c) = sub.restrict(Vec(lb.col(c)));
        }
        basis[d] = r;
    }
    Mat psi0 = basis[s.delta] / std::sqrt(2.0);

    Mat acc = Mat::Zero(4, 4);
    std::vector<double> pz;
    Mat ud = undo(z_rotation(s.theta));
    for (int k = 0; k < s.trajectories; k++) {
        BlockTrajectoryResult tr =
            evolve_trajectory(psi0, ev, s.dtau > 0 ? &mon : nullptr, s.seed + 0x9e3779b97f4a7c15ULL * (uint64_t)k);
        // Final sector from the support of the state.
        int dfin = s.delta;
        double best = -1;
        for (int d : window) {
            Mat proj(sub.dim(), 2);
            double w = 0;
            for (size_t i = 0; i < sub.dim(); i++) {
                size_t full = sub.indices[i];
                if (space.occupation(full, 1) - space.occupation(full, 0) == d) {
                    w += tr.psi.row(i).squaredNorm();
                }
            }
            if (w > best) {
                best = w;
                dfin = d;
            }
        }
        int sum = 0, obs = s.delta;
        for (const auto &o : tr.record.outcomes) {
            int v = (int)std::lround(o.value);
            sum += std::abs(v - obs);
            obs = v;
        }
        sum += std::abs(dfin - obs);
        int c = ((sum + std::abs(dfin - s.delta)) / 2) % 2;
        Mat out = basis[dfin].adjoint() * tr.psi * std::sqrt(2.0);
        if (c) {
            out.row(1) *= -1;
        }
        Mat sup = Mat::Zero(4, 4);
        for (int x = 0; x < 2; x++) {
            for (int y = 0; y < 2; y++) {
                Mat r = out.col(x) * out.col(y).adjoint();
                sup.col(x + 2 * y) = Eigen::Map<Vec>(r.data(), 4);
            }
        }
        acc += sup;
        pz.push_back(pauli_chi(ud * sup, 1)(3, 3).real());
    }
    acc /= s.trajectories;
    double tr_avg = 0.5 * (acc(0, 0) + acc(3, 0) + acc(0, 3) + acc(3, 3)).real();
    GateResult r;
    r.spec = s;
    finish_result(r, acc, z_rotation(s.theta), std::max(0.0, 1 - tr_avg));
    r.n_traj = s.trajectories;
    double mean = 0, var = 0;
    for (double v : pz) {
        mean += v;
    }
    mean /= pz.size();
    for (double v : pz) {
        var += (v - mean) * (v - mean);
    }
    var /= std::max<size_t>(1, pz.size() - 1);
    r.p_z_stderr = std::sqrt(var / pz.size());
    return r;
}

// ---------------------------------------------------------------------------------------
// X gate

GateResult gate_x(const GateSpec &in) {
    GateSpec s = in;
    s.kind = GateKind::X;
    s = resolve(s);
    const int N = s.n_max;
    const double T = s.T;
    Mat target = Mat::Zero(2, 2);
    target(0, 1) = target(1, 0) = 1;
    target *= std::polar(1.0, s.delta * kPi / 2);
    GateResult r;
    r.spec = s;

    if (s.kappa1 == 0) {
        // Lab frame: F(t) = a^2 b^2 - gamma(t)^4 with gamma(t) = gamma e^{i pi t / 2T}, plus
        // H_rot = -(pi / 2T)(n_a + n_b), propagated on the delta sector by Magnus steps.
        PairSector sec{s.delta, N};
        SpMat a2b2 = sector_a2b2(sec), id = sp_identity(sec.dim());
        SpMat num = sector_number(sec);
        cplx g4 = std::pow(s.gamma, 4);
        SpMat ff = SpMat(a2b2.adjoint() * a2b2);
        SpMat fa = SpMat(a2b2.adjoint());
        TimeOperator h;
        h.add(SpMat(-(kPi / (2 * T)) * num));
        cplx w = s.scheme == Scheme::Dissipative ? cplx(0, -0.5 * s.kappa) : cplx(-s.kappa, 0);
        // F^dag F = a2b2^dag a2b2 - g4(t) a2b2^dag - conj(g4(t)) a2b2 + |g4|^2
        h.add(SpMat(w * ff));
        h.add(SpMat(w * std::norm(g4) * id));
        h.add(SpMat(-w * g4 * fa), [T](double t) { return std::polar(1.0, 2 * kPi * t / T); });
        h.add(SpMat(-w * std::conj(g4) * a2b2), [T](double t) { return std::polar(1.0, -2 * kPi * t / T); });
        Mat c = sector_logical_basis(s.gamma, sec);
        int steps = s.steps > 0 ? s.steps : std::max(4000, (int)std::ceil(4000 * s.kappa * T));
        Mat out = evolve_magnus(c, h, T, steps);
        Mat m = c.adjoint() * out;
        double kept = m.squaredNorm() / 2;
        finish_result(r, superop_of(m), target, std::max(0.0, 1 - kept));
        return r;
    }

    // With loss: the rotating frame removes all time dependence exactly (loss operators only
    // pick up phases), leaving an idle followed by exp(i pi/2 (n_a + n_b)).
    SectorModel m = rotation_model(s, 1);
    m.generator = [&](const std::vector<int> &d) {
        PairSector sec{d[0], N};
        SectorGenerator g;
        g.h = SpMat(sec.dim(), sec.dim());
        SpMat f = stabilizer_jump(sec, s.gamma);
        if (s.scheme == Scheme::Dissipative) {
            g.jumps.emplace_back(s.kappa, f);
        } else {
            g.h -= s.kappa * SpMat(f.adjoint() * f);
        }
        return g;
    };
    m.final_unitary = [&](const std::vector<int> &d) {
        PairSector sec{d[0], N};
        SpMat u(sec.dim(), sec.dim());
        std::vector<Eigen::Triplet<cplx>> t;
        for (int n = 0; n < sec.dim(); n++) {
            t.emplace_back(n, n, std::polar(1.0, kPi / 2 * (sec.n_a(n) + sec.n_b(n))));
        }
        u.setFromTriplets(t.begin(), t.end());
        return u;
    };
    SectorChannel ch = run_sector_channel(m);
    finish_result(r, ch.superop, target, ch.leakage);
    r.flags.push_back("optimal T is as short as the stabilization allows");
    return r;
}

// ---------------------------------------------------------------------------------------
// CNOT

double cnot_loss_phase(double t0, double T, char mode) {
    (void)mode;  // loss on either mode of the target pair picks up the same control phase
    return -kPi / 2 * (1 - t0 / T);
}

namespace {

struct FourMode {
    CompositeSpace space;
    Subspace sub;
    SpMat a1b1, n2, f1, f2s, f2t, id;
    std::map<int, Mat> pair_basis;  // (N+1)^2 x 2 logical basis per delta
};

FourMode four_mode(const GateSpec &s, const std::vector<int> &d1, const std::vector<int> &d2) {
    FourMode m;
    const int N = s.n_max;
    m.space = CompositeSpace::uniform(4, N);
    std::vector<size_t> idx;
    for (size_t i = 0; i < m.space.dim(); i++) {
        int e1 = m.space.occupation(i, 1) - m.space.occupation(i, 0);
        int e2 = m.space.occupation(i, 3) - m.space.occupation(i, 2);
        if (std::find(d1.begin(), d1.end(), e1) != d1.end() && std::find(d2.begin(), d2.end(), e2) != d2.end()) {
            idx.push_back(i);
        }
    }
    m.sub = make_subspace(m.space, idx);
    std::vector<SpMat> a;
    for (size_t k = 0; k < 4; k++) {
        a.push_back(annihilation(m.space, k).mat);
    }
    cplx g2 = s.gamma * s.gamma;
    SpMat full_id = identity(m.space).mat;
    m.id = sp_identity((int)m.sub.dim());
    m.a1b1 = m.sub.restrict(SpMat(a[0] * a[1]));
    m.n2 = m.sub.restrict(SpMat(number(m.space, 2).mat + number(m.space, 3).mat));
    m.f1 = m.sub.restrict(SpMat(a[0] * a[0] * a[1] * a[1])) - g2 * g2 * m.id;
    // F2(t) = a2^2 b2^2 - g^2 (a1b1 + g^2) / 2 + e^{2 i pi t / T} g^2 (a1b1 - g^2) / 2
    m.f2s = m.sub.restrict(SpMat(a[2] * a[2] * a[3] * a[3])) - (g2 / 2.0) * (m.a1b1 + g2 * m.id);
    m.f2t = (g2 / 2.0) * (m.a1b1 - g2 * m.id);
    std::vector<int> all = d1;
    all.insert(all.end(), d2.begin(), d2.end());
    for (int d : all) {
        if (!m.pair_basis.count(d)) {
            m.pair_basis[d] = code_frame(PairCatParams::make(s.gamma, d, N)).logical_basis();
        }
    }
    return m;
}

// Columns |x1>_{d1} |x2>_{d2} for x = x1 + 2 x2, restricted to the subspace.
Mat product_basis(const FourMode &m, int d1, int d2) {
    Mat out(m.sub.dim(), 4);
    for (int x = 0; x < 4; x++) {
        Vec v = tensor(std::vector<Vec>{m.pair_basis.at(d1).col(x & 1), m.pair_basis.at(d2).col(x >> 1)});
        out.col(x) = m.sub.restrict(v);
    }
    return out;
}

EvolutionSpec cnot_evolution(const GateSpec &s, const FourMode &m) {
    const double T = s.T;
    cplx g2 = s.gamma * s.gamma;
    EvolutionSpec ev;
    ev.t_final = T;
    // H_rot = (pi/4T) (a1b1 - g^2)/(2 g^2) (n2 - 2|g|^2) + h.c.
    SpMat x = (kPi / (4 * T)) * SpMat(((m.a1b1 - g2 * m.id) / (2.0 * g2)) * (m.n2 - 2 * std::norm(s.gamma) * m.id));
    ev.hamiltonian.add(SpMat(x + SpMat(x.adjoint())));
    auto ph = [T](double t) { return std::polar(1.0, 2 * kPi * t / T); };
    auto phc = [T](double t) { return std::polar(1.0, -2 * kPi * t / T); };
    if (s.scheme == Scheme::Dissipative) {
        ev.jumps.push_back({s.kappa, TimeOperator(m.f1), "F1"});
        TimeOperator f2(m.f2s);
        f2.add(m.f2t, ph);
        ev.jumps.push_back({s.kappa, f2, "F2"});
    } else {
        const double K = s.kappa;
        ev.hamiltonian.add(SpMat(-K * SpMat(m.f1.adjoint() * m.f1)));
        ev.hamiltonian.add(SpMat(-K * SpMat(m.f2s.adjoint() * m.f2s + m.f2t.adjoint() * m.f2t)));
        ev.hamiltonian.add(SpMat(-K * SpMat(m.f2s.adjoint() * m.f2t)), ph);
        ev.hamiltonian.add(SpMat(-K * SpMat(m.f2t.adjoint() * m.f2s)), phc);
    }
    return ev;
}

Mat cnot_target(const GateSpec &s) {
    Mat u = Mat::Zero(4, 4);
    cplx ph = std::polar(1.0, -kPi * (std::norm(s.gamma) - s.delta / 2.0));
    u(0, 0) = 1;
    u(2, 2) = 1;
    u(3, 1) = ph;
    u(1, 3) = ph;
    return u;
}

double control_phase(const Mat &q) {
    cplx c0 = q(0, 0) + q(2, 2), c1 = q(1, 1) + q(3, 3);
    return std::arg(c1 / c0);
}

Mat control_phase_gate(double phi) {
    Mat d = Mat::Identity(4, 4);
    d(1, 1) = d(3, 3) = std::polar(1.0, phi);
    return d;
}

CnotRun cnot_trajectories(const GateSpec &s);

}  // namespace

CnotRun gate_cnot(const GateSpec &in) {
    GateSpec s = in;
    s.kind = GateKind::CNOT;
    if (s.n_max < 0) {
        s.n_max = std::min(14, dynamics_nmax(s.gamma, 1e-8, 0));
    }
    s = resolve(s);
    if (s.trajectories > 0) {
        return cnot_trajectories(s);
    }
    if (s.kappa1 > 0) {
        throw std::invalid_argument("gate_cnot: loss needs trajectories > 0");
    }
    if (s.inject_mode != 'a' && s.inject_mode != 'b') {
        throw std::invalid_argument("gate_cnot: inject_mode must be 'a' or 'b'");
    }
    const int d0 = s.delta;
    const int shift = s.inject_mode == 'a' ? 1 : -1;
    std::vector<int> d2{d0};
    if (s.inject_t0) {
        d2.push_back(d0 + shift);
    }
    FourMode m = four_mode(s, {d0}, d2);
    EvolutionSpec ev = cnot_evolution(s, m);
    Mat psi0 = product_basis(m, d0, d0);
    const double dt = s.T / (s.steps > 0 ? s.steps : 1000);
    Mat ref = propagate_stiff(psi0, ev, dt);
    Mat g0 = product_basis(m, d0, d0).adjoint() * ref;

    CnotRun run;
    run.result.spec = s;
    Mat target = cnot_target(s);
    double pf = std::norm(std::polar(1.0, -kPi * (std::norm(s.gamma) - s.delta / 2.0)) - 1.0);
    if (pf > 1e-12) {
        run.result.flags.push_back("control phase fix-up folded into the target");
    }
    if (!s.inject_t0) {
        run.kraus = g0;
        finish_result(run.result, superop_of(g0), target, std::max(0.0, 1 - g0.squaredNorm() / 4));
        return run;
    }
    const double t0 = *s.inject_t0;
    if (t0 < 0 || t0 > s.T) {
        throw std::invalid_argument("gate_cnot: inject_t0 outside [0, T]");
    }
    SpMat jump = m.sub.restrict(annihilation(m.space, s.inject_mode == 'a' ? 2 : 3).mat);
    ev.injections.push_back({t0, jump, std::string(1, s.inject_mode) + "2"});
    Mat out = propagate_stiff(psi0, ev, dt);

    // Row pattern before recovery.
    Mat home = product_basis(m, d0, d0 + shift);
    for (int x = 0; x < 4; x++) {
        int x1 = x & 1, x2 = (x >> 1) ^ x1;
        Vec e = home.col(x1 + 2 * x2);
        double nrm = out.col(x).squaredNorm();
        run.row_fidelity.push_back(nrm > 0 ? std::norm(e.dot(out.col(x))) / nrm : 0);
    }
    // Recovery of the target: |1_{d0+shift}> -> -|1_{d0}>.
    Mat g = home.adjoint() * out;
    g.row(2) *= -1;
    g.row(3) *= -1;
    Mat q = g * g0.inverse();
    run.phase = control_phase(q);
    if (s.exact_feedback) {
        g = control_phase_gate(-cnot_loss_phase(t0, s.T, s.inject_mode)) * g;
        run.phase = control_phase(g * g0.inverse());
    }
    run.kraus = g;
    double scale = std::sqrt(g.squaredNorm() / 4);
    Mat gn = g / scale;
    finish_result(run.result, superop_of(gn), target, 0);
    return run;
}

namespace {

CnotRun cnot_trajectories(const GateSpec &s) {
    const int d0 = s.delta;
    std::vector<int> win;
    for (int d = d0 - s.delta_span; d <= d0 + s.delta_span; d++) {
        if (std::abs(d) <= s.n_max) {
            win.push_back(d);
        }
    }
    FourMode m = four_mode(s, win, win);
    EvolutionSpec ev = cnot_evolution(s, m);
    // Explicit steps would be pinned by the stabilizer norm at the cutoff edge.
    ev.stiff = true;
    ev.dt = s.T / (s.steps > 0 ? s.steps : 1000);
    for (size_t k = 0; k < 4; k++) {
        ev.jumps.push_back({s.kappa1, TimeOperator(m.sub.restrict(annihilation(m.space, k).mat)),
                            std::string(k % 2 ? "b" : "a") + (k < 2 ? "1" : "2")});
    }
    SpMat d2op = m.sub.restrict(SpMat(number(m.space, 3).mat - number(m.space, 2).mat));
    MonitorSpec mon{s.dtau, d2op, {}};
    Mat psi0 = product_basis(m, d0, d0) / 2.0;

    CnotRun run;
    run.result.spec = s;
    if (s.dtau <= 0) {
        run.result.flags.push_back("bias-preserving but delta-uncorrected");
    }
    Mat acc = Mat::Zero(16, 16);
    for (int k = 0; k < s.trajectories; k++) {
        BlockTrajectoryResult tr =
            evolve_trajectory(psi0, ev, s.dtau > 0 ? &mon : nullptr, s.seed + 0x9e3779b97f4a7c15ULL * (uint64_t)k);
        // Final sectors from the support.
        std::map<std::pair<int, int>, double> w;
        for (size_t i = 0; i < m.sub.dim(); i++) {
            size_t f = m.sub.indices[i];
            int e1 = m.space.occupation(f, 1) - m.space.occupation(f, 0);
            int e2 = m.space.occupation(f, 3) - m.space.occupation(f, 2);
            w[{e1, e2}] += tr.psi.row(i).squaredNorm();
        }
        auto best = std::max_element(w.begin(), w.end(), [](auto &a, auto &b) { return a.second < b.second; });
        int f1 = best->first.first, f2 = best->first.second;
        double phi = 0;
        int sum = 0, obs = d0;
        for (const auto &o : tr.record.outcomes) {
            int v = (int)std::lround(o.value);
            if (v != obs) {
                double t_est = std::max(0.0, o.time - 0.5 * s.dtau);
                phi += (v - obs) > 0 ? (v - obs) * cnot_loss_phase(t_est, s.T, 'a')
                                     : (obs - v) * cnot_loss_phase(t_est, s.T, 'b');
                sum += std::abs(v - obs);
                obs = v;
            }
        }
        sum += std::abs(f2 - obs);
        int c1 = std::abs(f1 - d0) % 2;
        int c2 = ((sum + std::abs(f2 - d0)) / 2) % 2;
        Mat g = product_basis(m, f1, f2).adjoint() * tr.psi * 2.0;
        for (int x = 0; x < 4; x++) {
            int sg = ((c1 && (x & 1)) ? -1 : 1) * ((c2 && (x & 2)) ? -1 : 1);
            g.row(x) *= sg;
        }
        if (s.dtau > 0) {
            g = control_phase_gate(-phi) * g;
        }
        acc += superop_of(g);
    }
    acc /= s.trajectories;
    double tr = 0;
    for (int x = 0; x < 4; x++) {
        for (int i = 0; i < 4; i++) {
            tr += acc(i * 5, x * 5).real();
        }
    }
    finish_result(run.result, acc, cnot_target(s), std::max(0.0, 1 - tr / 4));
    run.result.n_traj = s.trajectories;
    return run;
}

}  // namespace

// ---------------------------------------------------------------------------------------
// Toffoli

namespace {

Vec sector_pair_coherent(cplx gamma, const PairSector &s) {
    Vec v(s.dim());
    double x = std::abs(gamma), ph = std::arg(gamma);
    double top = -1e300;
    std::vector<double> lm(s.dim());
    for (int n = 0; n < s.dim(); n++) {
        int na = s.n_a(n), nb = s.n_b(n);
        lm[n] = (na + nb) * std::log(x) - 0.5 * (std::lgamma(na + 1.0) + std::lgamma(nb + 1.0));
        top = std::max(top, lm[n]);
    }
    for (int n = 0; n < s.dim(); n++) {
        v(n) = std::exp(lm[n] - top) * std::polar(1.0, (s.n_a(n) + s.n_b(n)) * ph);
    }
    return v / v.norm();
}

}  // namespace

ToffoliReport toffoli_generators(const GateSpec &in, int n_max) {
    GateSpec s = in;
    s.kind = GateKind::Toffoli;
    if (n_max > 0) {
        s.n_max = n_max;
    }
    s = resolve(s);
    ToffoliReport rep;
    const int N = s.n_max;
    const double T = s.T;
    const cplx g = s.gamma, g2 = g * g;
    std::vector<PairSector> secs(3, PairSector{s.delta, N});
    rep.n_max = N;
    rep.dim = secs[0].dim() * secs[1].dim() * secs[2].dim();
    if ((double)rep.dim > 2e6) {
        throw std::length_error("toffoli_generators: product space over budget");
    }
    SpMat id = sp_identity(rep.dim);
    SpMat a1 = on_pair(secs, 0, sector_ab(secs[0]));
    SpMat a2 = on_pair(secs, 1, sector_ab(secs[1]));
    SpMat t4 = on_pair(secs, 2, sector_a2b2(secs[2]));
    SpMat n3 = on_pair(secs, 2, sector_number(secs[2]));
    SpMat p1 = a1 + g2 * id, m1 = a1 - g2 * id, p2 = a2 + g2 * id, m2 = a2 - g2 * id;
    rep.f3_static = t4 - 0.25 * SpMat(p1 * p2) + 0.25 * SpMat(m1 * p2) + 0.25 * SpMat(p1 * m2);
    rep.f3_rotating = -0.25 * SpMat(m1 * m2);
    rep.jumps.push_back(on_pair(secs, 0, stabilizer_jump(secs[0], g)));
    rep.jumps.push_back(on_pair(secs, 1, stabilizer_jump(secs[1], g)));
    rep.jumps.push_back(rep.f3_static + rep.f3_rotating);
    // H_rot = -(pi/4T) [ (a1b1 - g^2)/(2g^2) (a2b2^dag - g*^2)/(2g*^2) + h.c. ] (n3 - 2|g|^2)
    SpMat c = SpMat(m1 / (2.0 * g2)) * SpMat(SpMat(a2.adjoint()) - std::conj(g2) * id) / (2.0 * std::conj(g2));
    SpMat cc = c + SpMat(c.adjoint());
    rep.h_rot = (-kPi / (4 * T)) * SpMat(cc * (n3 - 2 * std::norm(g) * id));

    auto f3 = [&](double t) { return SpMat(rep.f3_static + std::polar(1.0, 2 * kPi * t / T) * rep.f3_rotating); };
    const double g4 = std::norm(g2);
    Mat cb = sector_logical_basis(g, secs[0]);
    for (double t : {0.0, 0.3 * T, 0.7 * T}) {
        SpMat f = f3(t);
        cplx gt = g * std::polar(1.0, kPi * t / (2 * T));
        for (int x = 0; x < 4; x++) {
            int x1 = x & 1, x2 = x >> 1;
            cplx tg = (x1 && x2) ? gt : g;
            double worst = 0, worst_cb = 0;
            for (int mu : {1, -1}) {
                Vec tgt = sector_code_state(tg, secs[2], mu);
                Vec v = tensor(std::vector<Vec>{sector_pair_coherent(x1 ? cplx(0, 1) * g : g, secs[0]),
                                                sector_pair_coherent(x2 ? cplx(0, 1) * g : g, secs[1]), tgt});
                worst = std::max(worst, (f * v).norm() / g4);
                Vec u = tensor(std::vector<Vec>{cb.col(x1), cb.col(x2), tgt});
                worst_cb = std::max(worst_cb, (f * u).norm() / g4);
            }
            rep.residual.push_back(worst);
            rep.residual_code_basis.push_back(worst_cb);
        }
    }
    {
        Vec v = tensor(std::vector<Vec>{sector_pair_coherent(cplx(0, 1) * g, secs[0]),
                                        sector_pair_coherent(cplx(0, 1) * g, secs[1]),
                                        sector_code_state(g, secs[2], 1)});
        rep.wrong_target_residual = (f3(0.5 * T) * v).norm() / g4;
    }
    // <1 1| H_rot |1 1> on the target sector against -(pi/2T)(n3 - 2|g|^2).
    {
        const int d = secs[2].dim();
        std::vector<SpMat> f{cb.col(1).sparseView(), cb.col(1).sparseView(), sp_identity(d)};
        SpMat w = tensor(f);
        Mat proj = Mat(SpMat(w.adjoint()) * rep.h_rot * w);
        Mat want = Mat(sector_number(secs[2])) - 2 * std::norm(g) * Mat::Identity(d, d);
        want *= -kPi / (2 * T);
        rep.hrot_deviation = (proj - want).operatorNorm();
        rep.hrot_scale = kPi / T;
    }
    return rep;
}

// ---------------------------------------------------------------------------------------
// State preparation

PrepResult prepare_plus(const GateSpec &in, int mu) {
    GateSpec s = in;
    s.kind = GateKind::Prepare;
    if (s.n_max < 0) {
        s.n_max = dynamics_nmax(s.gamma, 1e-12, 2);
    }
    s = resolve(s);
    const int N = s.n_max;
    const int d0 = s.delta;
    const int parity = mu > 0 ? 0 : 1;
    CompositeSpace space = CompositeSpace::uniform(2, N);
    // Window of neighbouring sectors so that delta conservation is an observation, not an input.
    std::vector<size_t> idx;
    for (size_t i = 0; i < space.dim(); i++) {
        int na = space.occupation(i, 0), nb = space.occupation(i, 1);
        int d = nb - na;
        int code_n = d0 >= 0 ? na : nb;
        if (std::abs(d - d0) <= 1 && code_n % 2 == parity) {
            idx.push_back(i);
        }
    }
    Subspace sub = make_subspace(space, idx);
    Operator a = annihilation(space, 0), b = annihilation(space, 1);
    SpMat a2b2 = sub.restrict(SpMat(a.mat * a.mat * b.mat * b.mat));
    SpMat dop = sub.restrict(SpMat(number(space, 1).mat - number(space, 0).mat));
    SpMat id = sp_identity((int)sub.dim());
    std::vector<int> occ{d0 >= 0 ? parity : parity - d0, d0 >= 0 ? parity + d0 : parity};
    Vec psi0 = sub.restrict(fock_state(space, occ).amp);
    PairCatParams pp = PairCatParams::make(s.gamma, d0, N);
    Vec want = sub.restrict(code_state(pp, mu).amp);

    PrepResult r;
    r.n_max = N;
    Mat rho;
    if (s.scheme == Scheme::Dissipative) {
        cplx g4 = std::pow(s.gamma, 4);
        EvolutionSpec ev;
        ev.t_final = s.T;
        ev.jumps.push_back({s.kappa, TimeOperator(SpMat(a2b2 - g4 * id)), "F"});
        rho = evolve_master_exact(Mat(psi0 * psi0.adjoint()), ev);
    } else {
        const double K = s.kappa, T = s.T;
        cplx g4 = std::pow(s.gamma, 4);
        TimeOperator h;
        h.add(SpMat(-K * SpMat(a2b2.adjoint() * a2b2)));
        h.add(SpMat(K * std::conj(g4) * a2b2), [T](double t) { return cplx(std::pow(t / T, 4)); });
        h.add(SpMat(K * g4 * SpMat(a2b2.adjoint())), [T](double t) { return cplx(std::pow(t / T, 4)); });
        h.add(SpMat(-K * std::norm(g4) * id), [T](double t) { return cplx(std::pow(t / T, 8)); });
        int steps = s.steps > 0 ? s.steps : 2000;
        Vec out = evolve_magnus(Mat(psi0), h, T, steps).col(0);
        rho = out * out.adjoint();
    }
    double tr = rho.trace().real();
    r.fidelity = (want.adjoint() * rho * want)(0, 0).real() / tr;
    r.delta_mean = (Mat(dop) * rho).trace().real() / tr;
    double d2 = (Mat(SpMat(dop * dop)) * rho).trace().real() / tr;
    r.delta_spread = std::sqrt(std::max(0.0, d2 - r.delta_mean * r.delta_mean));
    if (r.fidelity < 0.99) {
        r.flags.push_back("fidelity below 0.99");
    }
    return r;
}

// ---------------------------------------------------------------------------------------
// X-basis measurement

namespace {

struct MeasureSetup {
    CompositeSpace space;
    EvolutionSpec ev;
    int ancillas = 1;
};

MeasureSetup measure_setup(int n_max, double chi, double kappa1, MeasureVariant v) {
    MeasureSetup m;
    m.ancillas = v == MeasureVariant::OneAncilla ? 1 : 2;
    std::vector<ModeSpace> modes{{n_max}, {n_max}, {1}};
    if (m.ancillas == 2) {
        modes.push_back({1});
    }
    m.space = CompositeSpace(modes);
    SpMat h = -chi * SpMat(number(m.space, 2).mat * number(m.space, 0).mat);
    if (m.ancillas == 2) {
        h -= chi * SpMat(number(m.space, 3).mat * number(m.space, 1).mat);
    }
    m.ev.t_final = kPi / chi;
    m.ev.hamiltonian.add(h);
    if (kappa1 > 0) {
        m.ev.jumps.push_back({kappa1, TimeOperator(annihilation(m.space, 0).mat), "a"});
        m.ev.jumps.push_back({kappa1, TimeOperator(annihilation(m.space, 1).mat), "b"});
    }
    return m;
}

// (I + s X) / 2 on an ancilla mode.
SpMat x_projector(const CompositeSpace &space, size_t mode, int sign) {
    SpMat a = annihilation(space, mode).mat;
    SpMat x = a + SpMat(a.adjoint());
    return 0.5 * (identity(space).mat + double(sign) * x);
}

int decide(int sa, int sb, int delta, int delta0, bool two, bool *flag) {
    *flag = false;
    if (!two) {
        return sa;
    }
    int expect_b = sa * ((delta0 % 2) ? -1 : 1);
    if (sb == expect_b) {
        return sa;
    }
    if (delta > delta0) {
        // mode a lost more photons; mode b's parity is the reliable one
        return sb * ((delta0 % 2) ? -1 : 1);
    }
    if (delta < delta0) {
        return sa;
    }
    *flag = true;
    return sa;
}

}  // namespace

MeasureXResult measure_x(const StateVector &state, int delta, double chi, double kappa1, MeasureVariant variant,
                         uint64_t seed) {
    if (state.space.num_modes() != 2 || chi <= 0) {
        throw std::invalid_argument("measure_x: needs a two-mode state and chi > 0");
    }
    int N = state.space.modes[0].n_max;
    if (state.space.modes[1].n_max != N) {
        throw std::invalid_argument("measure_x: both modes need the same cutoff");
    }
    MeasureSetup m = measure_setup(N, chi, kappa1, variant);
    Vec plus = Vec::Ones(2) / std::sqrt(2.0);
    std::vector<Vec> f{state.amp};
    Vec joint = state.amp / state.amp.norm();
    for (int k = 0; k < m.ancillas; k++) {
        joint = Eigen::kroneckerProduct(plus, joint).eval();
    }
    TrajectoryResult tr = evolve_trajectory(joint, m.ev, nullptr, seed);
    std::mt19937_64 rng(seed ^ 0xa5a5a5a5deadbeefULL);
    auto u01 = [&]() { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
    Vec psi = tr.psi;
    int out[2] = {1, 1};
    for (int k = 0; k < m.ancillas; k++) {
        SpMat pp = x_projector(m.space, 2 + k, 1);
        Vec vp = pp * psi;
        double p = vp.squaredNorm();
        if (u01() < p) {
            psi = vp / std::sqrt(p);
        } else {
            out[k] = -1;
            Vec vm = x_projector(m.space, 2 + k, -1) * psi;
            psi = vm / vm.norm();
        }
    }
    // Delta of the cavity after the measurement window (always definite here: Fock-diagonal).
    SpMat dop = SpMat(number(m.space, 1).mat - number(m.space, 0).mat);
    double dmean = (psi.adjoint() * (dop * psi))(0, 0).real();
    MeasureXResult r;
    r.delta_measured = (int)std::lround(dmean);
    r.outcome = decide(out[0], out[1], r.delta_measured, delta, m.ancillas == 2, &r.error_flag);
    // Cavity post-state: ancillas in their measured X eigenstates.
    CompositeSpace cav = state.space;
    Vec post = Vec::Zero(cav.dim());
    size_t block = cav.dim();
    for (int anc = 0; anc < (1 << m.ancillas); anc++) {
        cplx w = 1;
        for (int k = 0; k < m.ancillas; k++) {
            int bit = (anc >> k) & 1;
            w *= (bit == 0 ? 1.0 : double(out[k])) / std::sqrt(2.0);
        }
        post += std::conj(w) * psi.segment(anc * block, block);
    }
    r.post_state = StateVector{cav, post / post.norm()};
    return r;
}

double measure_x_error(cplx gamma, int delta, double chi, double kappa1, MeasureVariant variant, int n_max) {
    if (chi <= 0 || kappa1 < 0) {
        throw std::invalid_argument("measure_x_error: needs chi > 0 and kappa1 >= 0");
    }
    if (n_max < 0) {
        n_max = dynamics_nmax(gamma, 1e-10, 2);
    }
    // The dispersive coupling and the losses are both Fock-diagonal in their action on
    // rho_{nn}: the cavity-diagonal blocks (each an ancilla matrix) evolve on their own,
    // and the outcome statistics only see those blocks. Element (alpha, beta) of the ancilla
    // block obeys a triangular linear system over Fock states, solved exactly.
    const int N = n_max, D = (N + 1) * (N + 1);
    const int k = variant == MeasureVariant::OneAncilla ? 1 : 2;
    const int na = 1 << k;
    const double T = kPi / chi;
    PairCatParams pp = PairCatParams::make(gamma, delta, N);
    std::vector<Vec> pop;
    for (int mu : {1, -1}) {
        Vec c = code_state(pp, mu).amp;
        pop.push_back(c.cwiseAbs2().cast<cplx>() / double(na));
    }
    auto energy = [&](int m, int alpha) {
        int a = m % (N + 1), b = m / (N + 1);
        return -chi * ((alpha & 1) * a + ((alpha >> 1) & 1) * b);
    };
    // prob[mu][s][m]: s indexes the ancilla outcomes (bit q set = -1 on ancilla q)
    std::vector<std::vector<Vec>> prob(2, std::vector<Vec>(na, Vec::Zero(D)));
    for (int al = 0; al < na; al++) {
        for (int be = 0; be < na; be++) {
            Mat m = Mat::Zero(D, D);
            for (int i = 0; i < D; i++) {
                int a = i % (N + 1), b = i / (N + 1);
                m(i, i) = cplx(-kappa1 * (a + b), -(energy(i, al) - energy(i, be)));
                if (a < N) {
                    m(i, i + 1) = kappa1 * (a + 1);
                }
                if (b < N) {
                    m(i, i + N + 1) = kappa1 * (b + 1);
                }
            }
            Mat e = (m * T).exp();
            for (int mu = 0; mu < 2; mu++) {
                Vec v = e * pop[mu];
                for (int so = 0; so < na; so++) {
                    double sign = 1;
                    for (int q = 0; q < k; q++) {
                        int s = (so >> q) & 1 ? -1 : 1;
                        int pw = ((al >> q) & 1) + ((be >> q) & 1);
                        sign *= (pw % 2 && s < 0) ? -0.5 : 0.5;
                    }
                    prob[mu][so] += sign * v;
                }
            }
        }
    }
    double err = 0;
    for (int mi = 0; mi < 2; mi++) {
        int mu = mi == 0 ? 1 : -1;
        for (int so = 0; so < na; so++) {
            int sa = (so & 1) ? -1 : 1, sb = (so & 2) ? -1 : 1;
            for (int i = 0; i < D; i++) {
                int d = i / (N + 1) - i % (N + 1);
                bool flag;
                if (decide(sa, sb, d, delta, k == 2, &flag) != mu) {
                    err += prob[mi][so](i).real();
                }
            }
        }
    }
    return err / 2;
}

// ---------------------------------------------------------------------------------------
// Closed-form error predictions

double Prediction::get(const std::string &label) const {
    for (const auto &[k, v] : p) {
        if (k == label) {
            return v;
        }
    }
    throw std::out_of_range("Prediction: no entry " + label);
}

namespace {

std::vector<std::pair<std::string, double>> predicted_terms(const GateSpec &s, double T, std::vector<std::string> *flags) {
    const double k = s.kappa, k1 = s.kappa1, g2 = std::norm(s.gamma), th = s.theta;
    const bool mon = s.dtau > 0;
    const double dt = mon ? s.dtau : T;
    if (!mon && flags && (s.kind == GateKind::CNOT || s.kind == GateKind::Toffoli)) {
        flags->push_back("no monitoring: the monitor interval is taken as the whole gate");
    }
    auto loss = [&](double t) {
        return mon ? k1 * k1 * g2 * g2 * dt * t : std::pow(k1 * g2 * t, 2);
    };
    switch (s.kind) {
        case GateKind::Z:
            return {{"Z", th * th / (16 * k * std::pow(g2, 4) * T) + loss(T)}};
        case GateKind::ZZ:
            return {{"ZI", loss(T)}, {"IZ", loss(T)}, {"ZZ", th * th / (8 * k * std::pow(g2, 4) * T)}};
        case GateKind::X:
            return {{"Z", loss(T)}};
        case GateKind::CNOT: {
            double base = k1 * k1 * g2 * g2 * dt * T;
            double z1 = base + kPi * kPi / (128 * k * std::pow(g2, 3) * T) + k1 * g2 * dt * dt * kPi * kPi / (96 * T);
            return {{"ZI", z1}, {"IZ", base / 2}, {"ZZ", base / 2}};
        }
        case GateKind::Toffoli: {
            double base = k1 * k1 * g2 * g2 * dt * T;
            double na = kPi * kPi / (256 * k * std::pow(g2, 3) * T) + k1 * g2 * dt * dt * kPi * kPi / (384 * T);
            return {{"ZII", base + na}, {"IZI", base + na}, {"ZZI", na}, {"IIZ", 5.0 / 8 * base},
                    {"ZIZ", base / 8},   {"IZZ", base / 8},   {"ZZZ", base / 8}};
        }
        default:
            throw std::invalid_argument("predict_error: no closed form for this gate");
    }
}

double total_at(const GateSpec &s, double T) {
    double t = 0;
    for (const auto &[l, v] : predicted_terms(s, T, nullptr)) {
        t += v;
    }
    return t;
}

}  // namespace

Prediction predict_error(const GateSpec &in) {
    GateSpec s = in;
    if (s.kind == GateKind::Z || s.kind == GateKind::ZZ) {
        if (s.theta == 0) {
            throw std::invalid_argument("predict_error: theta must be nonzero");
        }
    }
    Prediction r;
    const double k = s.kappa, k1 = s.kappa1, g2 = std::norm(s.gamma), th = s.theta;
    const bool mon = s.dtau > 0;
    if (s.T > 0) {
        r.p = predicted_terms(s, s.T, &r.flags);
        for (const auto &[l, v] : r.p) {
            r.total += v;
        }
    }
    // Optimal gate time.
    if (s.kind == GateKind::X) {
        r.t_opt = 0;
        r.p_opt = 0;
        r.flags.push_back("optimal T is as short as the stabilization allows");
        return r;
    }
    if (k1 == 0) {
        r.t_opt = std::numeric_limits<double>::infinity();
        r.p_opt = 0;
        return r;
    }
    if (s.kind == GateKind::Z && !mon) {
        r.t_opt = std::cbrt(th * th / (32 * k * k1 * k1 * std::pow(g2, 6)));
    } else if (s.kind == GateKind::Z && mon) {
        r.t_opt = std::sqrt(th * th / (16 * k * std::pow(g2, 4) * k1 * k1 * g2 * g2 * s.dtau));
    } else if (s.kind == GateKind::ZZ && !mon) {
        r.t_opt = std::cbrt(th * th / (32 * k * k1 * k1 * std::pow(g2, 6)));
    } else if (s.kind == GateKind::ZZ && mon) {
        r.t_opt = std::sqrt(th * th / (16 * k * std::pow(g2, 4) * k1 * k1 * g2 * g2 * s.dtau));
    } else if (mon) {
        // total = alpha T + beta / T
        double a = s.kind == GateKind::CNOT ? 2 : 3;
        double alpha = a * k1 * k1 * g2 * g2 * s.dtau;
        double beta = s.kind == GateKind::CNOT
                          ? kPi * kPi / (128 * k * std::pow(g2, 3)) + k1 * g2 * s.dtau * s.dtau * kPi * kPi / 96
                          : 3 * (kPi * kPi / (256 * k * std::pow(g2, 3)) + k1 * g2 * s.dtau * s.dtau * kPi * kPi / 384);
        r.t_opt = std::sqrt(beta / alpha);
    } else {
        // Golden-section search in log T.
        double lo = std::log(1e-9), hi = std::log(1e9);
        const double phi = (std::sqrt(5.0) - 1) / 2;
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = total_at(s, std::exp(x1)), f2 = total_at(s, std::exp(x2));
        for (int it = 0; it < 200; it++) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = total_at(s, std::exp(x1));
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = total_at(s, std::exp(x2));
            }
        }
        r.t_opt = std::exp(0.5 * (lo + hi));
    }
    r.p_opt = total_at(s, r.t_opt);
    return r;
}

ScalingFit fit_scaling(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 5) {
        throw std::invalid_argument("fit_scaling: need at least 5 points");
    }
    double xmin = *std::min_element(x.begin(), x.end()), xmax = *std::max_element(x.begin(), x.end());
    if (xmin <= 0 || xmax / xmin < 10 * (1 - 1e-9)) {
        throw std::invalid_argument("fit_scaling: sweep must span at least a decade");
    }
    const int n = (int)x.size();
    double sx = 0, sy = 0;
    std::vector<double> lx(n), ly(n);
    for (int i = 0; i < n; i++) {
        if (y[i] <= 0) {
            throw std::invalid_argument("fit_scaling: values must be positive");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    double mx = sx / n, my = sy / n, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; i++) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    ScalingFit f;
    f.exponent = sxy / sxx;
    double c = my - f.exponent * mx;
    f.prefactor = std::exp(c);
    double sse = 0;
    for (int i = 0; i < n; i++) {
        double e = ly[i] - c - f.exponent * lx[i];
        sse += e * e;
    }
    f.r2 = syy > 0 ? 1 - sse / syy : 1;
    // Student t quantiles (0.975) for n - 2 degrees of freedom.
    static const double tq[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086};
    int dof = n - 2;
    double t = dof <= 20 ? tq[dof - 1] : 1.96;
    f.exponent_ci = t * std::sqrt(sse / dof / sxx);
    return f;
}

std::pair<double, double> fit_bracket(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_bracket: need at least 2 points");
    }
    const int n = (int)x.size();
    double mx = 0, my = 0;
    for (int i = 0; i < n; i++) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; i++) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    double slope = sxy / sxx, a = my - slope * mx;
    return {a, slope / a};
}

}  // namespace paircat
