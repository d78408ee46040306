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

#include "paircat/channels.h"

#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace paircat {

namespace {

// Change between the logical |0>,|1> basis and the |+>,|-> basis (its own inverse).
const Mat2 &hadamard() {
    static const Mat2 h = (Mat2() << 1, 1, 1, -1).finished() / std::sqrt(2.0);
    return h;
}

SpMat single_mode_kraus(double eps, int k, int n_max) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (int n = k; n <= n_max; n++) {
        // <n-k| E_k |n> = sqrt(C(n,k)) eps^{k/2} (1-eps)^{(n-k)/2}
        double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
        double v = 0.5 * lc;
        if (k > 0) {
            v += 0.5 * k * std::log(eps);
        }
        if (n - k > 0) {
            v += 0.5 * (n - k) * std::log1p(-eps);
        }
        t.emplace_back(n - k, n, std::exp(v));
    }
    SpMat m(n_max + 1, n_max + 1);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

}  // namespace

Mat KrausChannel::apply(const Mat &rho) const {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const auto &e : ops) {
        Mat x = e.mat * rho;
        out.noalias() += (e.mat * Mat(x.adjoint())).adjoint();
    }
    return out;
}

KrausChannel lbc_kraus(double epsilon, int k_max, const CompositeSpace &space) {
    if (!(epsilon >= 0 && epsilon < 1)) {
        throw std::invalid_argument("lbc_kraus: epsilon must lie in [0, 1)");
    }
    if (space.num_modes() != 2) {
        throw std::invalid_argument("lbc_kraus: two-mode space required");
    }
    KrausChannel ch;
    int kmax = epsilon == 0 ? 0 : k_max;
    std::vector<SpMat> ea, eb;
    for (int k = 0; k <= kmax; k++) {
        ea.push_back(single_mode_kraus(epsilon, k, space.modes[0].n_max));
        eb.push_back(single_mode_kraus(epsilon, k, space.modes[1].n_max));
    }
    SpMat sum(space.dim(), space.dim());
    for (int k = 0; k <= kmax; k++) {
        for (int l = 0; l <= kmax; l++) {
            SpMat e = tensor(std::vector<SpMat>{ea[k], eb[l]});
            sum += SpMat(e.adjoint() * e);
            ch.ops.push_back(Operator{space, e});
        }
    }
    SpMat id = identity(space).mat;
    ch.completeness_defect = max_abs(SpMat(sum - id));
    return ch;
}

CodeSectorBasis code_sector_basis(cplx gamma, int delta_max, int n_max) {
    CodeSectorBasis b;
    b.gamma = gamma;
    b.delta_max = delta_max;
    if (n_max <= 0) {
        n_max = nmax_for(gamma) + delta_max;
    }
    b.space = CompositeSpace::uniform(2, n_max);
    b.states = Mat::Zero(b.space.dim(), 2 * (2 * delta_max + 1));
    for (int d = -delta_max; d <= delta_max; d++) {
        PairCatParams p = PairCatParams::make(gamma, d, n_max);
        for (int mu : {1, -1}) {
            b.states.col(b.column(mu, d)) = code_state(p, mu).amp;
        }
    }
    return b;
}

Mat StabilizedChannel::apply(const Mat &rho) const {
    auto S = [&](const Mat &r) {
        Mat out = -0.5 * (decay_block * r + r * decay_block);
        for (const auto &A : jump_blocks) {
            out.noalias() += A * r * A.adjoint();
        }
        return out;
    };
    Mat out = rho;
    Mat term = rho;
    for (int k = 1; k <= order; k++) {
        term = S(term) * (kappa1_t / k);
        out += term;
    }
    return out;
}

Mat StabilizedChannel::apply_logical(const Mat2 &rho) const {
    Mat2 pm = hadamard() * rho * hadamard();
    Mat in = Mat::Zero(basis.size(), basis.size());
    int p = basis.column(1, 0), m = basis.column(-1, 0);
    in(p, p) = pm(0, 0);
    in(p, m) = pm(0, 1);
    in(m, p) = pm(1, 0);
    in(m, m) = pm(1, 1);
    return apply(in);
}

StabilizedChannel stabilized_loss_channel(cplx gamma, double kappa1_t, int order, int delta_max, int n_max) {
    if (delta_max < order) {
        throw std::invalid_argument("stabilized_loss_channel: delta_max < order lets loss chains escape");
    }
    if (kappa1_t * std::norm(gamma) > 0.3) {
        warn("stabilized_loss_channel: kappa1 t |gamma|^2 above 0.3, expansion unreliable");
    }
    StabilizedChannel ch;
    ch.basis = code_sector_basis(gamma, delta_max, n_max);
    ch.kappa1_t = kappa1_t;
    ch.order = order;
    const Mat &B = ch.basis.states;
    ch.decay_block = Mat::Zero(B.cols(), B.cols());
    for (size_t mode : {0, 1}) {
        SpMat L = annihilation(ch.basis.space, mode).mat;
        Mat LB = L * B;
        ch.jump_blocks.push_back(B.adjoint() * LB);
        ch.decay_block += LB.adjoint() * LB;
    }
    return ch;
}

namespace {

// Logical image of |+>, |-> after recovery from sector d.
Mat2 recovery_targets(int d) {
    int flip = std::abs(d) % 2 == 0 ? 1 : -1;
    Mat2 v;
    Eigen::Vector2cd plus(1 / std::sqrt(2.0), 1 / std::sqrt(2.0));
    Eigen::Vector2cd minus(1 / std::sqrt(2.0), -1 / std::sqrt(2.0));
    v.col(0) = flip > 0 ? plus : minus;
    v.col(1) = flip > 0 ? minus : plus;
    return v;
}

}  // namespace

Mat2 RecoveryMap::apply(const Mat &rho) const {
    Mat2 out = Mat2::Zero();
    for (int d = -delta_max; d <= delta_max; d++) {
        const auto &D = domain[d + delta_max];
        Eigen::MatrixXcd R = recovery_targets(d) * D.adjoint();
        out += R * rho * R.adjoint();
    }
    return out;
}

Mat2 RecoveryMap::apply_sector(const Mat &rho, int delta_max) {
    Mat2 out = Mat2::Zero();
    for (int d = -delta_max; d <= delta_max; d++) {
        int i = 2 * (d + delta_max);
        Mat2 V = recovery_targets(d);
        out += V * rho.block(i, i, 2, 2) * V.adjoint();
    }
    return out;
}

RecoveryMap recovery_map(cplx gamma, int delta_max, RecoveryVariant variant, double epsilon, int n_max) {
    RecoveryMap r;
    r.gamma = gamma;
    r.delta_max = delta_max;
    r.gamma_domain = variant == RecoveryVariant::Lbc ? gamma * std::sqrt(1 - epsilon) : gamma;
    if (n_max <= 0) {
        n_max = nmax_for(gamma) + delta_max;
    }
    for (int d = -delta_max; d <= delta_max; d++) {
        PairCatParams p = PairCatParams::make(r.gamma_domain, d, n_max);
        Eigen::MatrixX2cd D(p.space.dim(), 2);
        D.col(0) = code_state(p, 1).amp;
        D.col(1) = code_state(p, -1).amp;
        r.domain.push_back(D);
    }
    return r;
}

PauliProcess process_tomography(const CodeChannel &channel) {
    const auto &W = pauli_matrices();
    auto unit = [](int a, int b) {
        Mat2 e = Mat2::Zero();
        e(a, b) = 1;
        return e;
    };
    auto vec = [](const Mat2 &m) {
        Eigen::Vector4cd v;
        v << m(0, 0), m(1, 0), m(0, 1), m(1, 1);
        return v;
    };
    Eigen::Matrix<cplx, 16, 1> target;
    Eigen::Matrix<cplx, 16, 16> G;
    PauliProcess res;
    for (int b = 0; b < 2; b++) {
        for (int a = 0; a < 2; a++) {
            Mat2 out = channel(unit(a, b));
            target.segment<4>(4 * (a + 2 * b)) = vec(out);
            if (a == b) {
                res.leakage += 0.5 * (1 - out.trace().real());
            }
            for (int j = 0; j < 4; j++) {
                for (int k = 0; k < 4; k++) {
                    G.block<4, 1>(4 * (a + 2 * b), j + 4 * k) = vec(W[j] * unit(a, b) * W[k].adjoint());
                }
            }
        }
    }
    Eigen::Matrix<cplx, 16, 1> x = G.fullPivLu().solve(target);
    for (int j = 0; j < 4; j++) {
        for (int k = 0; k < 4; k++) {
            res.r(j, k) = x(j + 4 * k);
        }
    }
    return res;
}

PauliProcess process_tomography(const std::function<Mat(const Mat &)> &channel, const CodeFrame &frame) {
    Mat L = frame.logical_basis();
    return process_tomography([&](const Mat2 &rho) -> Mat2 {
        Mat out = channel(L * rho * L.adjoint());
        return L.adjoint() * out * L;
    });
}

Mat4 analytic_lbc_matrix(cplx gamma, double epsilon, int k_max) {
    double g2 = std::norm(gamma);
    cplx gp = gamma * std::sqrt(1 - epsilon);
    double n0p = norm_pm(gamma, 0, 1), n0m = norm_pm(gamma, 0, -1);
    Mat4 E = Mat4::Zero();
    for (int k = 0; k <= k_max; k++) {
        for (int l = 0; l <= k_max; l++) {
            double M = std::pow(epsilon * g2, k + l) *
                       std::exp(-2 * epsilon * g2 - std::lgamma(k + 1.0) - std::lgamma(l + 1.0));
            int d = k - l;
            int mn = std::min(k, l), mx = std::max(k, l);
            bool even = mn % 2 == 0;
            int mu_p = mx % 2 == 0 ? 1 : -1;
            int mu_m = -mu_p;
            double np = norm_pm(gp, d, mu_p) / n0p;
            double nm = norm_pm(gp, d, mu_m) / n0m;
            double s = std::sqrt(norm_pm(gp, d, 1) * norm_pm(gp, d, -1) / (n0p * n0m));
            if (even) {
                E(0, 0) += M * np;
                E(3, 3) += M * nm;
                E(1, 1) += M * s;
                E(2, 2) += M * s;
            } else {
                E(0, 3) += M * nm;
                E(3, 0) += M * np;
                E(1, 2) += M * s;
                E(2, 1) += M * s;
            }
        }
    }
    return E;
}

PauliProcess analytic_lbc_process(cplx gamma, double epsilon, int k_max) {
    Mat4 E = analytic_lbc_matrix(gamma, epsilon, k_max);
    return process_tomography([&](const Mat2 &rho) -> Mat2 {
        Mat2 pm = hadamard() * rho * hadamard();
        Eigen::Vector4cd v(pm(0, 0), pm(0, 1), pm(1, 0), pm(1, 1));
        Eigen::Vector4cd w = E * v;
        Mat2 out;
        out << w(0), w(1), w(2), w(3);
        return hadamard() * out * hadamard();
    });
}

double trace_distance(const Mat &a, const Mat &b) {
    Mat d = a - b;
    d = 0.5 * (d + d.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(d, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Mat pauli_string(int j, int num_qubits) {
    Mat w = Mat::Identity(1, 1);
    for (int q = 0; q < num_qubits; q++) {
        Mat p = pauli_matrices()[(j >> (2 * q)) & 3];
        w = Eigen::kroneckerProduct(p, w).eval();
    }
    return w;
}

std::string pauli_label(int j, int num_qubits) {
    std::string s;
    for (int q = 0; q < num_qubits; q++) {
        s += "IXYZ"[(j >> (2 * q)) & 3];
    }
    return s;
}

Mat pauli_chi(const Mat &superop, int num_qubits) {
    const int d = 1 << num_qubits;
    const int n = d * d;
    if (superop.rows() != n || superop.cols() != n) {
        throw std::invalid_argument("pauli_chi: superoperator size does not match qubit count");
    }
    // J_{(a,i),(b,l)} = E(|a><b|)_{il}; index (a,i) -> i + d a.
    Mat choi(n, n);
    for (int a = 0; a < d; a++) {
        for (int b = 0; b < d; b++) {
            for (int i = 0; i < d; i++) {
                for (int l = 0; l < d; l++) {
                    choi(i + d * a, l + d * b) = superop(i + d * l, a + d * b);
                }
            }
        }
    }
    Mat w(n, n);
    for (int j = 0; j < n; j++) {
        Mat p = pauli_string(j, num_qubits);
        for (int a = 0; a < d; a++) {
            for (int i = 0; i < d; i++) {
                w(i + d * a, j) = p(i, a);
            }
        }
    }
    return w.adjoint() * choi * w / double(n);
}

}  // namespace paircat
