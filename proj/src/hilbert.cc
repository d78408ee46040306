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

#include "paircat/hilbert.h"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace paircat {

CompositeSpace::CompositeSpace(std::vector<ModeSpace> m) : modes(std::move(m)) {
    for (const auto &mode : modes) {
        if (mode.n_max < 1) {
            throw std::invalid_argument("ModeSpace needs n_max >= 1");
        }
    }
}

CompositeSpace CompositeSpace::uniform(int num_modes, int n_max) {
    return CompositeSpace(std::vector<ModeSpace>(num_modes, ModeSpace{n_max}));
}

size_t CompositeSpace::dim() const {
    size_t d = 1;
    for (const auto &m : modes) {
        d *= m.dim();
    }
    return d;
}

size_t CompositeSpace::stride(size_t mode) const {
    size_t s = 1;
    for (size_t k = 0; k < mode; k++) {
        s *= modes[k].dim();
    }
    return s;
}

int CompositeSpace::occupation(size_t index, size_t mode) const {
    return (int)((index / stride(mode)) % modes[mode].dim());
}

size_t CompositeSpace::index_of(const std::vector<int> &occ) const {
    if (occ.size() != modes.size()) {
        throw std::invalid_argument("occupation list does not match mode count");
    }
    size_t idx = 0;
    for (size_t k = 0; k < modes.size(); k++) {
        if (occ[k] < 0 || occ[k] > modes[k].n_max) {
            throw std::out_of_range("occupation outside truncation");
        }
        idx += (size_t)occ[k] * stride(k);
    }
    return idx;
}

Operator Operator::adjoint() const {
    return Operator{space, SpMat(mat.adjoint())};
}

static void check_same(const Operator &a, const Operator &b) {
    if (!(a.space == b.space)) {
        throw std::invalid_argument("operators act on different spaces");
    }
}

Operator operator*(const Operator &a, const Operator &b) {
    check_same(a, b);
    return Operator{a.space, SpMat(a.mat * b.mat)};
}
Operator operator+(const Operator &a, const Operator &b) {
    check_same(a, b);
    return Operator{a.space, SpMat(a.mat + b.mat)};
}
Operator operator-(const Operator &a, const Operator &b) {
    check_same(a, b);
    return Operator{a.space, SpMat(a.mat - b.mat)};
}
Operator operator*(cplx s, const Operator &a) {
    return Operator{a.space, SpMat(s * a.mat)};
}

DensityMatrix DensityMatrix::pure(const StateVector &psi) {
    return DensityMatrix{psi.space, psi.amp * psi.amp.adjoint()};
}

int nmax_for(cplx gamma) {
    double g2 = std::norm(gamma);
    return (int)std::ceil(g2 + 8 * std::sqrt(g2 + 1) + 8);
}

TailCheck tail_check(cplx gamma, int n_max, double tol) {
    double x = std::norm(gamma);
    double tail = 0;
    if (x > 0) {
        // Poisson upper tail, summed in log space from n_max + 1 until terms vanish.
        for (int n = n_max + 1; n < n_max + 2000; n++) {
            double term = std::exp(-x + n * std::log(x) - std::lgamma(n + 1.0));
            tail += term;
            if (term < 1e-300 || (n > x && term < tail * 1e-17)) {
                break;
            }
        }
    }
    TailCheck r;
    r.lost = 2 * tail - tail * tail;
    r.ok = r.lost < tol;
    return r;
}

Operator identity(const CompositeSpace &space) {
    SpMat m((Eigen::Index)space.dim(), (Eigen::Index)space.dim());
    m.setIdentity();
    return Operator{space, m};
}

static void check_mode(const CompositeSpace &space, size_t mode) {
    if (mode >= space.num_modes()) {
        throw std::out_of_range("invalid mode index");
    }
}

Operator annihilation(const CompositeSpace &space, size_t mode) {
    check_mode(space, mode);
    size_t d = space.dim();
    size_t s = space.stride(mode);
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(d);
    for (size_t i = 0; i < d; i++) {
        int n = space.occupation(i, mode);
        if (n > 0) {
            t.emplace_back((int)(i - s), (int)i, std::sqrt((double)n));
        }
    }
    SpMat m((Eigen::Index)d, (Eigen::Index)d);
    m.setFromTriplets(t.begin(), t.end());
    return Operator{space, m};
}

Operator creation(const CompositeSpace &space, size_t mode) {
    return annihilation(space, mode).adjoint();
}

static Operator diagonal(const CompositeSpace &space, const std::vector<cplx> &diag) {
    size_t d = space.dim();
    std::vector<Eigen::Triplet<cplx>> t;
    for (size_t i = 0; i < d; i++) {
        if (diag[i] != cplx(0)) {
            t.emplace_back((int)i, (int)i, diag[i]);
        }
    }
    SpMat m((Eigen::Index)d, (Eigen::Index)d);
    m.setFromTriplets(t.begin(), t.end());
    return Operator{space, m};
}

Operator number(const CompositeSpace &space, size_t mode) {
    check_mode(space, mode);
    std::vector<cplx> diag(space.dim());
    for (size_t i = 0; i < diag.size(); i++) {
        diag[i] = (double)space.occupation(i, mode);
    }
    return diagonal(space, diag);
}

Operator delta_projector(const CompositeSpace &space, int delta, size_t mode_a, size_t mode_b) {
    check_mode(space, mode_a);
    check_mode(space, mode_b);
    std::vector<cplx> diag(space.dim());
    for (size_t i = 0; i < diag.size(); i++) {
        diag[i] = (space.occupation(i, mode_b) - space.occupation(i, mode_a) == delta) ? 1.0 : 0.0;
    }
    return diagonal(space, diag);
}

Operator parity_projector(const CompositeSpace &space, size_t mode, int parity) {
    check_mode(space, mode);
    if (parity != 1 && parity != -1) {
        throw std::invalid_argument("parity must be +1 or -1");
    }
    std::vector<cplx> diag(space.dim());
    for (size_t i = 0; i < diag.size(); i++) {
        int sign = (space.occupation(i, mode) % 2 == 0) ? 1 : -1;
        diag[i] = (sign == parity) ? 1.0 : 0.0;
    }
    return diagonal(space, diag);
}

Operator displacement(const CompositeSpace &space, size_t mode, cplx alpha) {
    check_mode(space, mode);
    int dm = space.modes[mode].dim();
    Mat gen = Mat::Zero(dm, dm);
    for (int n = 1; n < dm; n++) {
        double s = std::sqrt((double)n);
        gen(n, n - 1) += alpha * s;
        gen(n - 1, n) -= std::conj(alpha) * s;
    }
    Mat d = gen.exp();
    if (!tail_check(alpha, space.modes[mode].n_max).ok) {
        warn("displacement: truncation tail above 1e-10");
    }
    std::vector<SpMat> factors;
    for (size_t k = 0; k < space.num_modes(); k++) {
        if (k == mode) {
            factors.push_back(d.sparseView(1e-300, 1));
        } else {
            SpMat id(space.modes[k].dim(), space.modes[k].dim());
            id.setIdentity();
            factors.push_back(id);
        }
    }
    return Operator{space, tensor(factors)};
}

StateVector fock_state(const CompositeSpace &space, const std::vector<int> &occ) {
    StateVector s{space, Vec::Zero((Eigen::Index)space.dim())};
    s.amp[(Eigen::Index)space.index_of(occ)] = 1;
    return s;
}

StateVector coherent_state(const CompositeSpace &space, const std::vector<cplx> &alphas) {
    if (alphas.size() != space.num_modes()) {
        throw std::invalid_argument("one amplitude per mode required");
    }
    std::vector<Vec> factors;
    for (size_t k = 0; k < alphas.size(); k++) {
        int dm = space.modes[k].dim();
        Vec v(dm);
        cplx a = alphas[k];
        double pref = std::exp(-std::norm(a) / 2);
        cplx term = pref;
        for (int n = 0; n < dm; n++) {
            if (n > 0) {
                term *= a / std::sqrt((double)n);
            }
            v[n] = term;
        }
        factors.push_back(v);
    }
    return StateVector{space, tensor(factors)};
}

SpMat tensor(const std::vector<SpMat> &factors) {
    if (factors.empty()) {
        throw std::invalid_argument("empty tensor product");
    }
    SpMat acc = factors[0];
    for (size_t k = 1; k < factors.size(); k++) {
        acc = Eigen::kroneckerProduct(factors[k], acc).eval();
    }
    return acc;
}

Vec tensor(const std::vector<Vec> &factors) {
    if (factors.empty()) {
        throw std::invalid_argument("empty tensor product");
    }
    Vec acc = factors[0];
    for (size_t k = 1; k < factors.size(); k++) {
        acc = Eigen::kroneckerProduct(factors[k], acc).eval();
    }
    return acc;
}

Subspace make_subspace(const CompositeSpace &space, std::vector<size_t> indices) {
    Subspace s;
    s.space = space;
    s.indices = std::move(indices);
    s.position.assign(space.dim(), -1);
    for (size_t k = 0; k < s.indices.size(); k++) {
        s.position[s.indices[k]] = (long)k;
    }
    return s;
}

Subspace delta_sector(const CompositeSpace &space, const std::vector<int> &deltas, size_t mode_a,
                      size_t mode_b) {
    check_mode(space, mode_a);
    check_mode(space, mode_b);
    std::vector<size_t> idx;
    for (size_t i = 0; i < space.dim(); i++) {
        int d = space.occupation(i, mode_b) - space.occupation(i, mode_a);
        for (int x : deltas) {
            if (d == x) {
                idx.push_back(i);
                break;
            }
        }
    }
    return make_subspace(space, std::move(idx));
}

SpMat Subspace::restrict(const SpMat &op) const {
    return restrict_rect(op, *this);
}

SpMat Subspace::restrict_rect(const SpMat &op, const Subspace &from) const {
    std::vector<Eigen::Triplet<cplx>> t;
    for (size_t c = 0; c < from.indices.size(); c++) {
        for (SpMat::InnerIterator it(op, (Eigen::Index)from.indices[c]); it; ++it) {
            long r = position[(size_t)it.row()];
            if (r >= 0) {
                t.emplace_back((int)r, (int)c, it.value());
            }
        }
    }
    SpMat m((Eigen::Index)dim(), (Eigen::Index)from.dim());
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

Vec Subspace::restrict(const Vec &v) const {
    Vec r(dim());
    for (size_t k = 0; k < indices.size(); k++) {
        r[(Eigen::Index)k] = v[(Eigen::Index)indices[k]];
    }
    return r;
}

Vec Subspace::lift(const Vec &v) const {
    Vec r = Vec::Zero((Eigen::Index)space.dim());
    for (size_t k = 0; k < indices.size(); k++) {
        r[(Eigen::Index)indices[k]] = v[(Eigen::Index)k];
    }
    return r;
}

double max_abs(const SpMat &m) {
    double r = 0;
    for (int k = 0; k < m.outerSize(); k++) {
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            r = std::max(r, std::abs(it.value()));
        }
    }
    return r;
}

void warn(const std::string &msg) {
    std::cerr << "paircat warning: " << msg << "\n";
}

}  // namespace paircat
