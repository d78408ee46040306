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

#include <cmath>
#include <limits>
#include <stdexcept>

namespace paircat {

namespace {

// log of sum_{n in class} x^{2n+D} / (n! (n+D)!); cls = 0 all, 1 even n, -1 odd n.
double log_series(double x, int D, int cls) {
    if (x <= 0) {
        if (D == 0 && cls != -1) {
            return 0.0;
        }
        return -std::numeric_limits<double>::infinity();
    }
    double lx = std::log(x);
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> logs;
    for (int n = 0; n < 4000; n++) {
        if (cls == 1 && n % 2 != 0) {
            continue;
        }
        if (cls == -1 && n % 2 == 0) {
            continue;
        }
        double l = (2 * n + D) * lx - std::lgamma(n + 1.0) - std::lgamma(n + D + 1.0);
        logs.push_back(l);
        mx = std::max(mx, l);
        if (n > x && l < mx + std::log(1e-17)) {
            break;
        }
    }
    double s = 0;
    for (double l : logs) {
        s += std::exp(l - mx);
    }
    return mx + std::log(s);
}

double log_norm_pm(cplx gamma, int delta, int mu) {
    double x = std::norm(gamma);
    return -2 * x + log_series(x, std::abs(delta), mu);
}

SpMat outer(const Vec &u, const Vec &v) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (Eigen::Index i = 0; i < u.size(); i++) {
        if (u[i] == cplx(0)) {
            continue;
        }
        for (Eigen::Index j = 0; j < v.size(); j++) {
            if (v[j] != cplx(0)) {
                t.emplace_back((int)i, (int)j, u[i] * std::conj(v[j]));
            }
        }
    }
    SpMat m(u.size(), v.size());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

void check_pair(const PairCatParams &p) {
    if (p.space.num_modes() != 2) {
        throw std::invalid_argument("pair-cat states need a two-mode space");
    }
}

// Amplitudes of the gamma-sector with parity class cls, divided by exp(log_norm / 2).
Vec sector_amplitudes(const PairCatParams &p, int cls, double log_norm) {
    const CompositeSpace &sp = p.space;
    Vec v = Vec::Zero((Eigen::Index)sp.dim());
    double x = std::norm(p.gamma);
    double lx = std::log(x);
    double arg = std::arg(p.gamma);
    for (size_t i = 0; i < sp.dim(); i++) {
        int na = sp.occupation(i, 0);
        int nb = sp.occupation(i, 1);
        if (nb - na != p.delta) {
            continue;
        }
        int n = p.delta >= 0 ? na : nb;
        if (cls == 1 && n % 2 != 0) {
            continue;
        }
        if (cls == -1 && n % 2 == 0) {
            continue;
        }
        double lmag = -x + 0.5 * (na + nb) * lx - 0.5 * (std::lgamma(na + 1.0) + std::lgamma(nb + 1.0));
        v[(Eigen::Index)i] = std::polar(std::exp(lmag - 0.5 * log_norm), (na + nb) * arg);
    }
    return v;
}

}  // namespace

double bessel_i(int nu, double x) {
    nu = std::abs(nu);
    double h = x / 2;
    double term = 1;
    for (int k = 1; k <= nu; k++) {
        term *= h / k;
    }
    double sum = term;
    for (int k = 1; k < 10000; k++) {
        term *= h * h / (k * (double)(k + nu));
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) {
            break;
        }
    }
    return sum;
}

double bessel_j(int nu, double x) {
    int sign = (nu < 0 && (nu % 2 != 0)) ? -1 : 1;
    nu = std::abs(nu);
    double h = x / 2;
    double term = 1;
    for (int k = 1; k <= nu; k++) {
        term *= h / k;
    }
    double sum = term;
    for (int k = 1; k < 10000; k++) {
        term *= -h * h / (k * (double)(k + nu));
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum) && k > h) {
            break;
        }
    }
    return sign * sum;
}

double norm_delta(cplx gamma, int delta) {
    return std::exp(log_norm_pm(gamma, delta, 0));
}

double norm_pm(cplx gamma, int delta, int mu) {
    if (mu != 1 && mu != -1) {
        throw std::invalid_argument("mu must be +1 or -1");
    }
    return std::exp(log_norm_pm(gamma, delta, mu));
}

PairCatParams PairCatParams::make(cplx gamma, int delta, int n_max) {
    if (n_max < 0) {
        n_max = nmax_for(gamma) + std::abs(delta);
    }
    return PairCatParams{gamma, delta, CompositeSpace::uniform(2, n_max)};
}

StateVector pair_coherent_state(const PairCatParams &p) {
    check_pair(p);
    if (p.gamma == cplx(0)) {
        int d = p.delta;
        return fock_state(p.space, d >= 0 ? std::vector<int>{0, d} : std::vector<int>{-d, 0});
    }
    return StateVector{p.space, sector_amplitudes(p, 0, log_norm_pm(p.gamma, p.delta, 0))};
}

StateVector code_state(const PairCatParams &p, int mu) {
    check_pair(p);
    if (mu != 1 && mu != -1) {
        throw std::invalid_argument("mu must be +1 or -1");
    }
    if (p.gamma == cplx(0)) {
        int d = std::abs(p.delta);
        int lo = mu == 1 ? 0 : 1;
        return fock_state(p.space, p.delta >= 0 ? std::vector<int>{lo, lo + d} : std::vector<int>{lo + d, lo});
    }
    return StateVector{p.space, sector_amplitudes(p, mu, log_norm_pm(p.gamma, p.delta, mu))};
}

Mat CodeFrame::logical_basis() const {
    Mat m(zero.amp.size(), 2);
    m.col(0) = zero.amp;
    m.col(1) = one.amp;
    return m;
}

CodeFrame code_frame(const PairCatParams &p) {
    check_pair(p);
    CodeFrame f;
    f.params = p;
    f.plus = code_state(p, 1);
    f.minus = code_state(p, -1);
    f.zero = StateVector{p.space, (f.plus.amp + f.minus.amp) / std::sqrt(2.0)};
    f.one = StateVector{p.space, (f.plus.amp - f.minus.amp) / std::sqrt(2.0)};
    f.norm_delta = norm_delta(p.gamma, p.delta);
    f.norm_plus = norm_pm(p.gamma, p.delta, 1);
    f.norm_minus = norm_pm(p.gamma, p.delta, -1);
    f.r = std::exp(0.5 * (log_norm_pm(p.gamma, p.delta, -1) - log_norm_pm(p.gamma, p.delta, 1)));
    f.phi = 2 * std::norm(p.gamma) - (2 * std::abs(p.delta) + 1) * M_PI / 4;
    SpMat pp = outer(f.plus.amp, f.plus.amp);
    SpMat mm = outer(f.minus.amp, f.minus.amp);
    f.code_projector = Operator{p.space, SpMat(pp + mm)};
    f.x = Operator{p.space, SpMat(pp - mm)};
    f.z = Operator{p.space, SpMat(outer(f.zero.amp, f.zero.amp) - outer(f.one.amp, f.one.amp))};
    f.y = Operator{p.space, SpMat(cplx(0, 1) * SpMat(f.x.mat * f.z.mat))};
    return f;
}

const std::array<Eigen::Matrix2cd, 4> &pauli_matrices() {
    static const std::array<Eigen::Matrix2cd, 4> p = [] {
        std::array<Eigen::Matrix2cd, 4> m;
        const cplx i(0, 1);
        m[0] << 1, 0, 0, 1;
        m[1] << 0, 1, 1, 0;
        m[2] << 0, -i, i, 0;
        m[3] << 1, 0, 0, -1;
        return m;
    }();
    return p;
}

std::array<cplx, 4> pauli_project(const Operator &op, const CodeFrame &frame) {
    if (!(op.space == frame.params.space)) {
        throw std::invalid_argument("operator and frame live on different spaces");
    }
    Mat b = frame.logical_basis();
    Eigen::Matrix2cd m = b.adjoint() * (op.mat * b);
    std::array<cplx, 4> c;
    for (int k = 0; k < 4; k++) {
        c[k] = (pauli_matrices()[k] * m).trace() / 2.0;
    }
    return c;
}

}  // namespace paircat
