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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

namespace paircat {

TimeOperator &TimeOperator::add(SpMat op, std::function<cplx(double)> coef) {
    if (!terms.empty() && (op.rows() != terms[0].op.rows() || op.cols() != terms[0].op.cols())) {
        throw std::invalid_argument("TimeOperator terms must share one shape");
    }
    terms.push_back(Term{std::move(op), std::move(coef)});
    return *this;
}

bool TimeOperator::time_dependent() const {
    for (const auto &t : terms) {
        if (t.coef) {
            return true;
        }
    }
    return false;
}

SpMat TimeOperator::at(double t) const {
    if (terms.empty()) {
        return SpMat();
    }
    SpMat m = terms[0].coef ? SpMat(terms[0].coef(t) * terms[0].op) : terms[0].op;
    for (size_t k = 1; k < terms.size(); k++) {
        if (terms[k].coef) {
            m += terms[k].coef(t) * terms[k].op;
        } else {
            m += terms[k].op;
        }
    }
    return m;
}

Mat TimeOperator::apply(double t, const Mat &v) const {
    Mat out = Mat::Zero(terms.empty() ? v.rows() : terms[0].op.rows(), v.cols());
    for (const auto &term : terms) {
        if (term.coef) {
            out.noalias() += term.coef(t) * (term.op * v);
        } else {
            out.noalias() += term.op * v;
        }
    }
    return out;
}

Mat TimeOperator::apply_adjoint(double t, const Mat &v) const {
    Mat out = Mat::Zero(terms.empty() ? v.rows() : terms[0].op.cols(), v.cols());
    for (const auto &term : terms) {
        if (term.coef) {
            out.noalias() += std::conj(term.coef(t)) * (term.op.adjoint() * v);
        } else {
            out.noalias() += term.op.adjoint() * v;
        }
    }
    return out;
}

static double one_norm(const SpMat &m) {
    double best = 0;
    for (int k = 0; k < m.outerSize(); k++) {
        double s = 0;
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            s += std::abs(it.value());
        }
        best = std::max(best, s);
    }
    return best;
}

double TimeOperator::norm_bound(double t) const {
    double s = 0;
    for (const auto &term : terms) {
        s += one_norm(term.op) * (term.coef ? std::abs(term.coef(t)) : 1.0);
    }
    return s;
}

bool TrajectoryRecord::operator==(const TrajectoryRecord &o) const {
    if (jumps != o.jumps || corrections != o.corrections || outcomes.size() != o.outcomes.size()) {
        return false;
    }
    for (size_t k = 0; k < outcomes.size(); k++) {
        if (outcomes[k].time != o.outcomes[k].time || outcomes[k].value != o.outcomes[k].value) {
            return false;
        }
    }
    return true;
}

double choose_dt(const EvolutionSpec &spec, double t, bool pure) {
    if (spec.dt > 0) {
        return std::min(spec.dt, spec.t_final > 0 ? spec.t_final : spec.dt);
    }
    double rate = 0, osc = 0;
    for (double s : {t, t + 0.5 * spec.t_final, t + spec.t_final}) {
        double h = (pure ? 1 : 2) * spec.hamiltonian.norm_bound(s);
        double r = h;
        for (const auto &j : spec.jumps) {
            double n = j.op.norm_bound(s);
            r += (pure ? 0.5 : 1) * j.rate * n * n;
        }
        rate = std::max(rate, r);
        osc = std::max(osc, h);
    }
    // RK4 is stable out to about 2.8 on both the real and imaginary axes, but oscillating
    // components only keep their phase well below that.
    double dt = rate > 0 ? 2.5 / rate : spec.t_final;
    if (osc > 0) {
        dt = std::min(dt, 0.1 / osc);
    }
    if (spec.t_final > 0) {
        dt = std::min(dt, spec.t_final / 16);
    }
    return dt;
}

Mat lindblad_rhs(const EvolutionSpec &spec, double t, const Mat &rho) {
    const cplx I(0, 1);
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    if (!spec.hamiltonian.empty()) {
        Mat hr = spec.hamiltonian.apply(t, rho);
        Mat hrd = spec.hamiltonian.apply(t, rho.adjoint());
        out += -I * hr + I * hrd.adjoint();
    }
    for (const auto &j : spec.jumps) {
        if (j.rate == 0) {
            continue;
        }
        Mat x = j.op.apply(t, rho);              // L rho
        Mat y = j.op.apply(t, rho.adjoint());    // L rho^dag
        Mat lrl = j.op.apply(t, y.adjoint());    // L rho L^dag
        Mat ldlr = j.op.apply_adjoint(t, x);     // L^dag L rho
        Mat rldl = j.op.apply_adjoint(t, y);     // (rho L^dag L)^dag
        out += j.rate * (lrl - 0.5 * ldlr - 0.5 * rldl.adjoint());
    }
    return out;
}

namespace {

std::vector<double> breakpoints(const EvolutionSpec &spec) {
    std::vector<double> b;
    for (const auto &inj : spec.injections) {
        if (inj.time < 0 || inj.time > spec.t_final) {
            throw std::invalid_argument("injection time outside [0, t_final]");
        }
        b.push_back(inj.time);
    }
    b.push_back(spec.t_final);
    std::sort(b.begin(), b.end());
    return b;
}

template <typename F>
Mat rk4(const F &f, double t, const Mat &y, double h) {
    Mat k1 = f(t, y);
    Mat k2 = f(t + h / 2, y + (h / 2) * k1);
    Mat k3 = f(t + h / 2, y + (h / 2) * k2);
    Mat k4 = f(t + h, y + h * k3);
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

Mat heff_rhs(const EvolutionSpec &spec, double t, const Mat &psi) {
    const cplx I(0, 1);
    Mat out = spec.hamiltonian.empty() ? Mat::Zero(psi.rows(), psi.cols()) : Mat(-I * spec.hamiltonian.apply(t, psi));
    for (const auto &j : spec.jumps) {
        if (j.rate != 0) {
            out -= 0.5 * j.rate * j.op.apply_adjoint(t, j.op.apply(t, psi));
        }
    }
    return out;
}

// Integrates from t0 to t1 in steps no larger than dt.
template <typename F>
Mat integrate(const F &f, double t0, double t1, const Mat &y0, double dt) {
    if (t1 <= t0) {
        return y0;
    }
    int n = std::max(1, (int)std::ceil((t1 - t0) / dt - 1e-9));
    double h = (t1 - t0) / n;
    Mat y = y0;
    for (int k = 0; k < n; k++) {
        y = rk4(f, t0 + k * h, y, h);
    }
    return y;
}

}  // namespace

Mat evolve_master(const Mat &rho0, const EvolutionSpec &spec, bool hermitian) {
    double dt = choose_dt(spec);
    auto f = [&](double t, const Mat &r) { return lindblad_rhs(spec, t, r); };
    cplx tr0 = rho0.trace();
    double fro0 = rho0.norm();
    Mat rho = rho0;
    double t = 0;
    size_t inj = 0;
    auto injections = spec.injections;
    std::sort(injections.begin(), injections.end(),
              [](const JumpInjection &a, const JumpInjection &b) { return a.time < b.time; });
    for (double stop : breakpoints(spec)) {
        int n = std::max(1, (int)std::ceil((stop - t) / dt - 1e-9));
        double h = (stop - t) / n;
        for (int k = 0; k < n && stop > t; k++) {
            rho = rk4(f, t + k * h, rho, h);
            if (hermitian) {
                rho = (0.5 * (rho + rho.adjoint())).eval();
            }
        }
        t = stop;
        while (inj < injections.size() && injections[inj].time <= t) {
            const SpMat &op = injections[inj].op;
            Mat x = op * rho;
            rho = (op * Mat(x.adjoint())).adjoint();
            if (hermitian && std::abs(rho.trace()) > 0) {
                rho /= rho.trace();
                tr0 = 1;
                fro0 = rho.norm();
            }
            inj++;
        }
        if (!std::isfinite(rho.norm()) || rho.norm() > (1 + 1e-3) * std::max(fro0, std::abs(tr0)) + 1e-12 ||
            (hermitian && std::abs(rho.trace() - tr0) > 1e-6)) {
            throw StepSizeError("master equation step unstable; reduce dt", dt / 4);
        }
    }
    return rho;
}

DensityMatrix evolve_master(const DensityMatrix &rho0, const EvolutionSpec &spec) {
    return DensityMatrix{rho0.space, evolve_master(rho0.rho, spec, true)};
}

Mat liouvillian(const EvolutionSpec &spec, double t) {
    const cplx I(0, 1);
    Eigen::Index d = 0;
    if (!spec.hamiltonian.empty()) {
        d = spec.hamiltonian.terms[0].op.rows();
    } else if (!spec.jumps.empty()) {
        d = spec.jumps[0].op.terms[0].op.rows();
    }
    Mat id = Mat::Identity(d, d);
    Mat heff = Mat::Zero(d, d);
    if (!spec.hamiltonian.empty()) {
        heff = Mat(spec.hamiltonian.at(t));
    }
    Mat L = Mat::Zero(d * d, d * d);
    for (const auto &j : spec.jumps) {
        Mat l = Mat(j.op.at(t));
        heff += -0.5 * I * j.rate * (l.adjoint() * l);
        // vec(A X B) = (B^T kron A) vec(X)
        Mat lc = l.conjugate();
        for (Eigen::Index a = 0; a < d; a++) {
            for (Eigen::Index b = 0; b < d; b++) {
                if (lc(a, b) != cplx(0)) {
                    L.block(a * d, b * d, d, d) += j.rate * lc(a, b) * l;
                }
            }
        }
    }
    // -i (Heff X - X Heff^dag)
    Mat hc = heff.conjugate();
    for (Eigen::Index a = 0; a < d; a++) {
        L.block(a * d, a * d, d, d) += -I * heff;
        for (Eigen::Index b = 0; b < d; b++) {
            if (hc(a, b) != cplx(0)) {
                L.block(a * d, b * d, d, d) += I * hc(a, b) * id;
            }
        }
    }
    return L;
}

Mat evolve_master_exact(const Mat &rho0, const EvolutionSpec &spec) {
    if (spec.hamiltonian.time_dependent()) {
        throw std::invalid_argument("exact propagation needs a time-independent spec");
    }
    for (const auto &j : spec.jumps) {
        if (j.op.time_dependent()) {
            throw std::invalid_argument("exact propagation needs a time-independent spec");
        }
    }
    Mat L = liouvillian(spec, 0);
    Mat P = (L * spec.t_final).exp();
    Eigen::Index d = rho0.rows();
    Vec v = Eigen::Map<const Vec>(rho0.data(), d * d);
    Vec w = P * v;
    return Eigen::Map<Mat>(w.data(), d, d);
}

Mat propagate(const Mat &psi0, const EvolutionSpec &spec) {
    double dt = choose_dt(spec, 0, true);
    auto f = [&](double t, const Mat &y) { return heff_rhs(spec, t, y); };
    auto injections = spec.injections;
    std::stable_sort(injections.begin(), injections.end(),
                     [](const JumpInjection &a, const JumpInjection &b) { return a.time < b.time; });
    Mat psi = psi0;
    double t = 0;
    size_t inj = 0;
    double scale = psi0.norm();
    for (double stop : breakpoints(spec)) {
        psi = integrate(f, t, stop, psi, dt);
        t = stop;
        while (inj < injections.size() && injections[inj].time <= t) {
            psi = (injections[inj].op * psi).eval();
            scale = std::max(scale, psi.norm());
            inj++;
        }
        if (!std::isfinite(psi.norm()) || psi.norm() > (1 + 1e-6) * scale) {
            throw StepSizeError("propagation step unstable; reduce dt", dt / 4);
        }
    }
    return psi;
}

namespace {

SpMat heff_at(const EvolutionSpec &spec, double t, int d) {
    SpMat h(d, d);
    if (!spec.hamiltonian.empty()) {
        h = spec.hamiltonian.at(t);
    }
    for (const auto &j : spec.jumps) {
        if (j.rate != 0) {
            SpMat l = j.op.at(t);
            h -= cplx(0, 0.5 * j.rate) * SpMat(SpMat(l.adjoint()) * l);
        }
    }
    return h;
}

// y' = -i H(t) y over [t0, t1], SDIRK2 with gamma = 1 - 1/sqrt(2).
Mat sdirk2(const EvolutionSpec &spec, double t0, double t1, const Mat &y0, double dt) {
    if (t1 <= t0) {
        return y0;
    }
    const int d = (int)y0.rows();
    const double g = 1 - 1 / std::sqrt(2.0);
    int n = std::max(1, (int)std::ceil((t1 - t0) / dt - 1e-9));
    double h = (t1 - t0) / n;
    SpMat id(d, d);
    id.setIdentity();
    auto solve = [&](double t, const Mat &rhs) {
        // (I + i g h H(t)) y = rhs
        SpMat m = id + cplx(0, g * h) * heff_at(spec, t, d);
        m.makeCompressed();
        Eigen::SparseLU<SpMat> lu(m);
        if (lu.info() != Eigen::Success) {
            throw std::runtime_error("propagate_stiff: factorization failed");
        }
        return Mat(lu.solve(rhs));
    };
    Mat y = y0;
    for (int k = 0; k < n; k++) {
        double t = t0 + k * h;
        Mat y1 = solve(t + g * h, y);
        Mat k1 = (y1 - y) / (g * h);
        y = solve(t + h, Mat(y + (1 - g) * h * k1));
    }
    return y;
}

}  // namespace

Mat propagate_stiff(const Mat &psi0, const EvolutionSpec &spec, double dt) {
    if (dt <= 0) {
        throw std::invalid_argument("propagate_stiff: dt must be positive");
    }
    auto injections = spec.injections;
    std::stable_sort(injections.begin(), injections.end(),
                     [](const JumpInjection &a, const JumpInjection &b) { return a.time < b.time; });
    Mat psi = psi0;
    double t = 0;
    size_t inj = 0;
    for (double stop : breakpoints(spec)) {
        psi = sdirk2(spec, t, stop, psi, dt);
        t = stop;
        while (inj < injections.size() && injections[inj].time <= t) {
            psi = (injections[inj].op * psi).eval();
            inj++;
        }
    }
    return psi;
}

namespace {

double u01(std::mt19937_64 &rng) {
    return (double)(rng() >> 11) * 0x1.0p-53;
}

void check_monitor(const MonitorSpec &m, const EvolutionSpec &spec) {
    if (m.interval <= 0) {
        throw std::invalid_argument("monitor interval must be positive");
    }
    for (int k = 0; k < m.observable.outerSize(); k++) {
        for (SpMat::InnerIterator it(m.observable, k); it; ++it) {
            if (it.row() != it.col() && std::abs(it.value()) > 1e-14) {
                throw std::invalid_argument("monitor observable is not diagonal in the evolving basis");
            }
        }
    }
    SpMat h(m.observable.rows(), m.observable.cols());
    if (!spec.hamiltonian.empty()) {
        h = spec.hamiltonian.at(0);
    }
    double scale = 1 + max_abs(h);
    SpMat c = m.observable * h - h * m.observable;
    bool ok = max_abs(c) < 1e-9 * scale;
    for (const auto &j : spec.jumps) {
        SpMat l = j.op.at(0);
        SpMat ll = l.adjoint() * l;
        SpMat cc = m.observable * ll - ll * m.observable;
        ok = ok && max_abs(cc) < 1e-9 * (1 + max_abs(ll));
    }
    if (!ok) {
        throw std::invalid_argument("monitor observable does not commute with the jump-free generator");
    }
}

}  // namespace

TrajectoryResult evolve_trajectory(const Vec &psi0, const EvolutionSpec &spec, const MonitorSpec *monitor,
                                   uint64_t seed) {
    BlockTrajectoryResult r = evolve_trajectory(Mat(psi0), spec, monitor, seed);
    return TrajectoryResult{r.psi.col(0), r.record};
}

BlockTrajectoryResult evolve_trajectory(const Mat &psi0, const EvolutionSpec &spec, const MonitorSpec *monitor,
                                        uint64_t seed) {
    if (monitor != nullptr) {
        check_monitor(*monitor, spec);
    }
    std::mt19937_64 rng(seed);
    if (spec.stiff && spec.dt <= 0) {
        throw std::invalid_argument("evolve_trajectory: stiff drift needs dt > 0");
    }
    double dt = spec.stiff ? spec.dt : choose_dt(spec, 0, true);
    if (monitor != nullptr) {
        dt = std::min(dt, monitor->interval / 10);
    }
    auto f = [&](double t, const Mat &y) { return heff_rhs(spec, t, y); };
    auto drift = [&](double t0, double h, const Mat &y) {
        if (spec.stiff) {
            return sdirk2(spec, t0, t0 + h, y, h);
        }
        return h == 0 ? y : integrate(f, t0, t0 + h, y, h);
    };
    auto injections = spec.injections;
    std::stable_sort(injections.begin(), injections.end(),
                     [](const JumpInjection &a, const JumpInjection &b) { return a.time < b.time; });

    BlockTrajectoryResult res;
    Mat psi = psi0 / psi0.norm();
    double t = 0;
    double threshold = u01(rng);
    size_t inj = 0;
    long tick = 1;
    const double eps = 1e-12 * std::max(1.0, spec.t_final);
    bool stochastic = false;
    for (const auto &j : spec.jumps) {
        stochastic = stochastic || j.rate > 0;
    }

    while (t < spec.t_final - eps) {
        double stop = std::min(t + dt, spec.t_final);
        if (inj < injections.size()) {
            stop = std::min(stop, injections[inj].time);
        }
        double t_mon = monitor != nullptr ? tick * monitor->interval : INFINITY;
        stop = std::min(stop, t_mon);
        double h = stop - t;
        Mat next = h > 0 ? drift(t, h, psi) : psi;
        if (stochastic && next.squaredNorm() < threshold) {
            // Bisect the crossing time down to dt / 100.
            double lo = 0, hi = h;
            while (hi - lo > dt / 100) {
                double mid = 0.5 * (lo + hi);
                Mat trial = drift(t, mid, psi);
                if (trial.squaredNorm() < threshold) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            psi = drift(t, hi, psi);
            t += hi;
            std::vector<double> w;
            double total = 0;
            for (const auto &j : spec.jumps) {
                double p = j.rate > 0 ? j.rate * j.op.apply(t, psi).squaredNorm() : 0.0;
                w.push_back(p);
                total += p;
            }
            double pick = u01(rng) * total;
            size_t which = 0;
            while (which + 1 < w.size() && pick >= w[which]) {
                pick -= w[which];
                which++;
            }
            psi = spec.jumps[which].op.apply(t, psi);
            psi /= psi.norm();
            res.record.jumps.emplace_back(t, (int)which);
            threshold = u01(rng);
            continue;
        }
        psi = next;
        t = stop;
        while (inj < injections.size() && injections[inj].time <= t + eps) {
            psi = (injections[inj].op * psi).eval();
            psi /= psi.norm();
            res.record.jumps.emplace_back(t, -1 - (int)inj);
            threshold = u01(rng);
            inj++;
        }
        if (monitor != nullptr && t >= t_mon - eps) {
            // Projective snapshot of a diagonal observable.
            double nrm = psi.squaredNorm();
            std::map<double, double> weight;
            for (Eigen::Index i = 0; i < psi.rows(); i++) {
                double v = monitor->observable.coeff(i, i).real();
                weight[v] += psi.row(i).squaredNorm() / nrm;
            }
            double pick = u01(rng);
            double value = weight.rbegin()->first;
            for (const auto &[v, p] : weight) {
                if (pick < p) {
                    value = v;
                    break;
                }
                pick -= p;
            }
            for (Eigen::Index i = 0; i < psi.rows(); i++) {
                if (monitor->observable.coeff(i, i).real() != value) {
                    psi.row(i).setZero();
                }
            }
            psi /= psi.norm();
            threshold = u01(rng);
            res.record.outcomes.push_back({t, value});
            if (monitor->feedback) {
                auto corr = monitor->feedback(res.record.outcomes, t);
                if (corr) {
                    psi = (corr->unitary * psi).eval();
                    res.record.corrections.emplace_back(t, corr->angle);
                }
            }
            tick++;
        }
    }
    res.psi = psi / psi.norm();
    return res;
}

Mat evolve_magnus(const Mat &psi0, const TimeOperator &hamiltonian, double t_final, int steps) {
    if (steps < 1) {
        throw std::invalid_argument("evolve_magnus: steps must be positive");
    }
    const double h = t_final / steps;
    const double c = std::sqrt(3.0) / 6;
    Mat psi = psi0;
    for (int k = 0; k < steps; k++) {
        double t = k * h;
        Mat a1 = Mat(hamiltonian.at(t + (0.5 - c) * h)) * cplx(0, -1);
        Mat a2 = Mat(hamiltonian.at(t + (0.5 + c) * h)) * cplx(0, -1);
        Mat omega = 0.5 * h * (a1 + a2) + (std::sqrt(3.0) / 12) * h * h * (a2 * a1 - a1 * a2);
        psi = (omega.exp() * psi).eval();
    }
    return psi;
}

Mat steady_state(const Mat &rho0, const EvolutionSpec &spec, double tol) {
    auto f = [&](double t, const Mat &r) { return lindblad_rhs(spec, t, r); };
    const Eigen::Index d = rho0.rows();
    bool static_gen = !spec.hamiltonian.time_dependent();
    for (const auto &j : spec.jumps) {
        static_gen = static_gen && !j.op.time_dependent();
    }
    if (static_gen && d <= 40) {
        // Doubling exact steps: relax by exp(L s) with s = 1/rate, 2s, 4s, ...
        Mat L = liouvillian(spec, 0);
        double rate = 0;
        for (const auto &j : spec.jumps) {
            double n = j.op.norm_bound(0);
            rate += j.rate * n * n;
        }
        rate += spec.hamiltonian.norm_bound(0);
        double s = rate > 0 ? 1 / rate : spec.t_final;
        Vec v = Eigen::Map<const Vec>(rho0.data(), d * d);
        Mat rho = rho0;
        double t = 0;
        while (t < spec.t_final) {
            double step = std::min(s, spec.t_final - t);
            v = (Mat(L * step).exp() * v).eval();
            t += step;
            s *= 2;
            rho = Eigen::Map<const Mat>(v.data(), d, d);
            rho = (0.5 * (rho + rho.adjoint())).eval();
            if (f(t, rho).cwiseAbs().maxCoeff() < tol) {
                return rho;
            }
        }
        throw std::runtime_error("steady state not reached within t_final");
    }
    double dt = choose_dt(spec);
    Mat rho = rho0;
    double t = 0;
    int check_every = std::max(1, (int)(0.05 / dt));
    for (long k = 0; t < spec.t_final; k++) {
        if (k % check_every == 0) {
            double rate = f(t, rho).cwiseAbs().maxCoeff();
            if (rate < tol) {
                return rho;
            }
        }
        rho = rk4(f, t, rho, dt);
        rho = (0.5 * (rho + rho.adjoint())).eval();
        t += dt;
    }
    if (f(t, rho).cwiseAbs().maxCoeff() < tol) {
        return rho;
    }
    throw std::runtime_error("steady state not reached within t_final");
}

}  // namespace paircat
