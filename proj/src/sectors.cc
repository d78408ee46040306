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

#include "paircat/sectors.h"

#include <cmath>
#include <stdexcept>
#include <Eigen/SparseLU>
#include <memory>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace paircat {

double pair_tail(cplx gamma, int delta, int n_max) {
    double x = std::norm(gamma);
    const int d = std::abs(delta);
    if (x == 0) {
        return 0;
    }
    // |n, n + d> carries x^{2n + d} / (n! (n + d)!).
    std::vector<double> lw;
    double peak = -1e300;
    for (int n = 0; n < 4000; n++) {
        double v = (2 * n + d) * std::log(x) - std::lgamma(n + 1.0) - std::lgamma(n + d + 1.0);
        lw.push_back(v);
        peak = std::max(peak, v);
        if (n > x && v < peak - 800) {
            break;
        }
    }
    double total = 0, kept = 0;
    for (size_t n = 0; n < lw.size(); n++) {
        double w = std::exp(lw[n] - peak);
        total += w;
        if ((int)n + d <= n_max) {
            kept += w;
        }
    }
    return std::max(0.0, 1 - kept / total);
}

int dynamics_nmax(cplx gamma, double tol, int margin) {
    double x = std::norm(gamma);
    if (x == 0) {
        return margin + 1;
    }
    // Weights of |n, n> in the pair-coherent state: x^{2n} / n!^2.
    std::vector<double> lw;
    double peak = -1e300;
    for (int n = 0; n < 4000; n++) {
        double v = 2 * n * std::log(x) - 2 * std::lgamma(n + 1.0);
        lw.push_back(v);
        peak = std::max(peak, v);
        if (n > x && v < peak - 800) {
            break;
        }
    }
    double total = 0;
    for (double v : lw) {
        total += std::exp(v - peak);
    }
    double tail = total;
    for (size_t n = 0; n < lw.size(); n++) {
        tail -= std::exp(lw[n] - peak);
        if (tail / total < tol) {
            return (int)n + margin;
        }
    }
    return (int)lw.size() + margin;
}

namespace {

using Trip = Eigen::Triplet<cplx>;

SpMat from_triplets(int rows, int cols, const std::vector<Trip> &t) {
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

// Local index of |na, nb> in a sector, or -1 when outside the cutoff.
int local_index(const PairSector &s, int na, int nb) {
    if (na < 0 || nb < 0 || na > s.n_max || nb > s.n_max || nb - na != s.delta) {
        return -1;
    }
    return s.delta >= 0 ? na : nb;
}

}  // namespace

SpMat sector_ab(const PairSector &s) {
    std::vector<Trip> t;
    for (int n = 0; n < s.dim(); n++) {
        int na = s.n_a(n), nb = s.n_b(n);
        int k = local_index(s, na - 1, nb - 1);
        if (k >= 0) {
            t.emplace_back(k, n, std::sqrt((double)na * nb));
        }
    }
    return from_triplets(s.dim(), s.dim(), t);
}

SpMat sector_a2b2(const PairSector &s) {
    std::vector<Trip> t;
    for (int n = 0; n < s.dim(); n++) {
        int na = s.n_a(n), nb = s.n_b(n);
        int k = local_index(s, na - 2, nb - 2);
        if (k >= 0) {
            t.emplace_back(k, n, std::sqrt((double)na * (na - 1) * nb * (nb - 1)));
        }
    }
    return from_triplets(s.dim(), s.dim(), t);
}

SpMat sector_number(const PairSector &s) {
    std::vector<Trip> t;
    for (int n = 0; n < s.dim(); n++) {
        t.emplace_back(n, n, (double)(s.n_a(n) + s.n_b(n)));
    }
    return from_triplets(s.dim(), s.dim(), t);
}

SpMat sector_a(const PairSector &from) {
    PairSector to{from.delta + 1, from.n_max};
    std::vector<Trip> t;
    for (int n = 0; n < from.dim(); n++) {
        int na = from.n_a(n), nb = from.n_b(n);
        int k = local_index(to, na - 1, nb);
        if (k >= 0) {
            t.emplace_back(k, n, std::sqrt((double)na));
        }
    }
    return from_triplets(std::max(to.dim(), 0), from.dim(), t);
}

SpMat sector_b(const PairSector &from) {
    PairSector to{from.delta - 1, from.n_max};
    std::vector<Trip> t;
    for (int n = 0; n < from.dim(); n++) {
        int na = from.n_a(n), nb = from.n_b(n);
        int k = local_index(to, na, nb - 1);
        if (k >= 0) {
            t.emplace_back(k, n, std::sqrt((double)nb));
        }
    }
    return from_triplets(std::max(to.dim(), 0), from.dim(), t);
}

Vec sector_code_state(cplx gamma, const PairSector &s, int mu) {
    int parity = mu > 0 ? 0 : 1;
    Vec v = Vec::Zero(s.dim());
    double x = std::abs(gamma);
    double ph = std::arg(gamma);
    if (x == 0) {
        // Fock survivors: |0, d> for +, |1, 1 + d> for -.
        if (parity < s.dim()) {
            v(parity) = 1;
        }
        return v;
    }
    double top = -1e300;
    for (int n = parity; n < s.dim(); n += 2) {
        int m = s.n_a(n) + s.n_b(n);
        top = std::max(top, m * std::log(x) - 0.5 * (std::lgamma(s.n_a(n) + 1.0) + std::lgamma(s.n_b(n) + 1.0)));
    }
    for (int n = parity; n < s.dim(); n += 2) {
        int na = s.n_a(n), nb = s.n_b(n);
        double lm = (na + nb) * std::log(x) - 0.5 * (std::lgamma(na + 1.0) + std::lgamma(nb + 1.0)) - top;
        v(n) = std::exp(lm) * std::polar(1.0, (na + nb) * ph);
    }
    return v / v.norm();
}

Mat sector_logical_basis(cplx gamma, const PairSector &s) {
    Vec p = sector_code_state(gamma, s, 1);
    Vec m = sector_code_state(gamma, s, -1);
    Mat c(s.dim(), 2);
    c.col(0) = (p + m) / std::sqrt(2.0);
    c.col(1) = (p - m) / std::sqrt(2.0);
    return c;
}

namespace {

using Key = std::vector<int>;  // deltas, observed deltas, record sums (mod 4)
using State = std::map<Key, Mat>;

Mat kron_dense(const Mat &a, const Mat &b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

SpMat kron_sparse(const SpMat &a, const SpMat &b) {
    SpMat r = Eigen::kroneckerProduct(a, b);
    return r;
}

SpMat identity_sp(int d) {
    SpMat m(d, d);
    m.setIdentity();
    return m;
}

// Block operator with `op` on pair j (first pair fastest).
SpMat on_pair(const std::vector<PairSector> &secs, int j, const SpMat &op) {
    std::vector<SpMat> f;
    for (int k = 0; k < (int)secs.size(); k++) {
        f.push_back(k == j ? op : identity_sp(secs[k].dim()));
    }
    return tensor(f);
}

struct Transfer {
    Key target_deltas;
    SpMat super;  // kappa1 conj(A) (x) A
};

struct Block {
    std::vector<PairSector> secs;
    int dim = 0;
    SpMat lind;  // sparse column-stacked generator inside the block
    std::vector<Transfer> out;
    std::map<double, Mat> half_step;  // exact propagators by step size
    std::map<double, std::shared_ptr<Eigen::SparseLU<SpMat>>> lu;
};

class Engine {
   public:
    explicit Engine(const SectorModel &m) : model_(m), P_(m.num_pairs) {
    }

    bool in_window(const Key &d) const {
        for (int j = 0; j < P_; j++) {
            if (std::abs(d[j] - model_.delta0[j]) > model_.delta_span || std::abs(d[j]) > model_.n_max) {
                return false;
            }
        }
        return true;
    }

    Block &block(const Key &d) {
        auto it = blocks_.find(d);
        if (it != blocks_.end()) {
            return it->second;
        }
        Block b;
        for (int j = 0; j < P_; j++) {
            b.secs.push_back(PairSector{d[j], model_.n_max});
        }
        b.dim = 1;
        for (const auto &s : b.secs) {
            b.dim *= s.dim();
        }
        SectorGenerator g = model_.generator(d);
        SpMat heff = g.h;
        for (const auto &[rate, f] : g.jumps) {
            heff -= cplx(0, 0.5 * rate) * SpMat(f.adjoint() * f);
        }
        for (int j = 0; j < P_; j++) {
            heff -= cplx(0, 0.5 * model_.kappa1) * on_pair(b.secs, j, sector_number(b.secs[j]));
        }
        SpMat id = identity_sp(b.dim);
        SpMat heff_conj = heff.conjugate();
        b.lind = cplx(0, -1) * kron_sparse(id, heff) + cplx(0, 1) * kron_sparse(heff_conj, id);
        for (const auto &[rate, f] : g.jumps) {
            SpMat fc = f.conjugate();
            b.lind += rate * kron_sparse(fc, f);
        }
        if (model_.kappa1 > 0) {
            for (int j = 0; j < P_; j++) {
                for (int dir : {+1, -1}) {
                    Key t = d;
                    t[j] += dir;
                    if (!in_window(t)) {
                        continue;
                    }
                    std::vector<SpMat> f;
                    for (int k = 0; k < P_; k++) {
                        if (k == j) {
                            f.push_back(dir > 0 ? sector_a(b.secs[k]) : sector_b(b.secs[k]));
                        } else {
                            f.push_back(identity_sp(b.secs[k].dim()));
                        }
                    }
                    SpMat a = tensor(f);
                    SpMat ac = a.conjugate();
                    b.out.push_back(Transfer{t, model_.kappa1 * kron_sparse(ac, a)});
                }
            }
        }
        return blocks_.emplace(d, std::move(b)).first->second;
    }

    static Key deltas_of(const Key &k, int P) {
        return Key(k.begin(), k.begin() + P);
    }

    // Loss transfers only.
    State jump(const State &s) {
        State out;
        for (const auto &[k, x] : s) {
            Block &b = block(deltas_of(k, P_));
            for (const auto &tr : b.out) {
                Key nk = k;
                for (int j = 0; j < P_; j++) {
                    nk[j] = tr.target_deltas[j];
                }
                Mat y = tr.super * x;
                auto it = out.find(nk);
                if (it == out.end()) {
                    out.emplace(nk, std::move(y));
                } else {
                    it->second += y;
                }
            }
        }
        return out;
    }

    static void accumulate(State &into, const State &add, cplx c) {
        for (const auto &[k, x] : add) {
            auto it = into.find(k);
            if (it == into.end()) {
                into.emplace(k, c * x);
            } else {
                it->second += c * x;
            }
        }
    }

    void exact_half(State &s, double h) {
        for (auto &[k, x] : s) {
            Block &b = block(deltas_of(k, P_));
            auto it = b.half_step.find(h);
            if (it == b.half_step.end()) {
                Mat l = Mat(b.lind) * (0.5 * h);
                it = b.half_step.emplace(h, l.exp()).first;
            }
            x = (it->second * x).eval();
        }
    }

    // Two-stage stiffly accurate SDIRK over a half step h / 2, split into n pieces.
    void implicit_half(State &s, double h, int n) {
        const double g = 1 - 1 / std::sqrt(2.0);
        const double dt = 0.5 * h / n;
        for (auto &[k, x] : s) {
            Block &b = block(deltas_of(k, P_));
            auto it = b.lu.find(dt);
            if (it == b.lu.end()) {
                SpMat a(b.lind.rows(), b.lind.cols());
                a.setIdentity();
                a -= (g * dt) * b.lind;
                a.makeCompressed();
                auto lu = std::make_shared<Eigen::SparseLU<SpMat>>();
                lu->analyzePattern(a);
                lu->factorize(a);
                if (lu->info() != Eigen::Success) {
                    throw std::runtime_error("sector engine: sparse LU failed");
                }
                it = b.lu.emplace(dt, lu).first;
            }
            for (int r = 0; r < n; r++) {
                Mat y1 = it->second->solve(x);
                Mat rhs = x + ((1 - g) / g) * (y1 - x);
                x = it->second->solve(rhs);
            }
        }
    }

    void half(State &s, double h) {
        if (exact_) {
            exact_half(s, h);
        } else {
            implicit_half(s, h, implicit_pieces_);
        }
    }

    void step(State &s, double h) {
        half(s, h);
        if (model_.kappa1 > 0) {
            State term = s;
            for (int k = 1; k <= 3; k++) {
                term = jump(term);
                if (term.empty()) {
                    break;
                }
                accumulate(s, term, std::pow(h, k) / std::tgamma(k + 1.0));
            }
        }
        half(s, h);
    }

    SectorChannel run() {
        const SectorModel &m = model_;
        if ((int)m.gamma.size() != P_ || (int)m.delta0.size() != P_) {
            throw std::invalid_argument("run_sector_channel: gamma and delta0 need one entry per pair");
        }
        if (m.t_final <= 0) {
            throw std::invalid_argument("run_sector_channel: t_final must be positive");
        }
        std::vector<bool> mon = m.monitored;
        mon.resize(P_, false);
        bool any_mon = false;
        for (bool b : mon) {
            any_mon = any_mon || b;
        }
        const int L = 1 << P_;
        const int ninp = L * L;

        Key d0 = m.delta0;
        Block &b0 = block(d0);
        exact_ = b0.dim <= m.exact_max_dim;
        Mat c0 = sector_logical_basis(m.gamma[0], b0.secs[0]);
        for (int j = 1; j < P_; j++) {
            c0 = kron_dense(sector_logical_basis(m.gamma[j], b0.secs[j]), c0);
        }
        Mat x0(b0.dim * b0.dim, ninp);
        for (int u = 0; u < ninp; u++) {
            int x = u % L, y = u / L;
            Mat r = c0.col(x) * c0.col(y).adjoint();
            x0.col(u) = Eigen::Map<Vec>(r.data(), r.size());
        }
        Key k0 = d0;
        for (int j = 0; j < P_; j++) {
            k0.push_back(d0[j]);
        }
        for (int j = 0; j < P_; j++) {
            k0.push_back(0);
        }
        State s;
        s.emplace(k0, x0);

        // Segment boundaries.
        std::vector<double> edges{0};
        if (any_mon && m.dtau > 0) {
            for (int k = 1; k * m.dtau < m.t_final * (1 - 1e-12); k++) {
                edges.push_back(k * m.dtau);
            }
        }
        edges.push_back(m.t_final);

        for (size_t seg = 0; seg + 1 < edges.size(); seg++) {
            double len = edges[seg + 1] - edges[seg];
            int n = std::max(1, m.substeps);
            double h = len / n;
            if (!exact_) {
                double lim = m.implicit_dt > 0 ? m.implicit_dt : m.t_final / 200;
                implicit_pieces_ = std::max(1, (int)std::ceil(0.5 * h / lim));
            }
            for (int k = 0; k < n; k++) {
                step(s, h);
            }
            bool last = seg + 2 == edges.size();
            if (!last) {
                s = relabel(s, mon);
            }
        }
        std::vector<bool> all(P_, true);
        s = relabel(s, all);

        SectorChannel out;
        out.superop = Mat::Zero(ninp, ninp);
        out.num_branches = (int)s.size();
        for (const auto &sec : b0.secs) {
            out.dims.push_back(sec.dim());
        }
        double kept = 0;
        for (const auto &[k, x] : s) {
            Key d = deltas_of(k, P_);
            Block &b = block(d);
            Mat v = sector_logical_basis(m.gamma[0], b.secs[0]);
            for (int j = 1; j < P_; j++) {
                v = kron_dense(sector_logical_basis(m.gamma[j], b.secs[j]), v);
            }
            // Parity flips from the record: max(k, l) mod 2 per pair.
            Vec zsign = Vec::Ones(L);
            for (int j = 0; j < P_; j++) {
                int sj = k[2 * P_ + j];
                int c = ((sj + std::abs(d[j] - m.delta0[j])) / 2) % 2;
                if (c) {
                    for (int xb = 0; xb < L; xb++) {
                        if ((xb >> j) & 1) {
                            zsign(xb) *= -1;
                        }
                    }
                }
            }
            Mat w = zsign.asDiagonal() * v.adjoint();
            SpMat fu;
            if (m.final_unitary) {
                fu = m.final_unitary(d);
                w = (w * fu).eval();
            }
            for (int u = 0; u < ninp; u++) {
                Mat r = Eigen::Map<const Mat>(x.col(u).data(), b.dim, b.dim);
                if (u % (L + 1) == 0) {
                    kept += r.trace().real();
                }
                Mat rl = w * r * w.adjoint();
                out.superop.col(u) += Eigen::Map<Vec>(rl.data(), rl.size());
            }
        }
        double tr = 0;
        for (int xb = 0; xb < L; xb++) {
            int u = xb * (L + 1);
            for (int i = 0; i < L; i++) {
                tr += out.superop(i * (L + 1), u).real();
            }
        }
        out.leakage = std::max(0.0, 1 - tr / L);
        out.dropped = std::max(0.0, 1 - kept / L);
        return out;
    }

    State relabel(const State &s, const std::vector<bool> &which) {
        State out;
        for (const auto &[k, x] : s) {
            Key nk = k;
            for (int j = 0; j < P_; j++) {
                if (!which[j]) {
                    continue;
                }
                int d = k[j], obs = k[P_ + j];
                nk[P_ + j] = d;
                nk[2 * P_ + j] = (k[2 * P_ + j] + std::abs(d - obs)) % 4;
            }
            auto it = out.find(nk);
            if (it == out.end()) {
                out.emplace(nk, x);
            } else {
                it->second += x;
            }
        }
        return out;
    }

   private:
    const SectorModel &model_;
    int P_;
    bool exact_ = true;
    int implicit_pieces_ = 1;
    std::map<Key, Block> blocks_;
};

}  // namespace

SectorChannel run_sector_channel(const SectorModel &model) {
    if (model.num_pairs < 1 || model.num_pairs > 3) {
        throw std::invalid_argument("run_sector_channel: 1 to 3 pairs supported");
    }
    if (!model.generator) {
        throw std::invalid_argument("run_sector_channel: missing generator");
    }
    Engine e(model);
    return e.run();
}

}  // namespace paircat
