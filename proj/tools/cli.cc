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


#include "cli.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "paircat/channels.h"
#include "paircat/gates.h"
#include "paircat/sectors.h"
#include "paircat/stabilizer.h"

namespace paircat::cli {

namespace {

constexpr const char *kVersion = "0.1.0";

std::string trim(const std::string &s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) {
        return "";
    }
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string num(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

double parse_double(const std::string &key, const std::string &v) {
    size_t used = 0;
    double x;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception &) {
        throw std::invalid_argument(key + ": not a number: '" + v + "'");
    }
    if (used != v.size()) {
        throw std::invalid_argument(key + ": not a number: '" + v + "'");
    }
    return x;
}

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One grid point: a single value per key.
struct Point {
    std::map<std::string, std::string> v;

    const std::string &str(const std::string &k) const {
        return v.at(k);
    }
    double d(const std::string &k) const {
        return parse_double(k, v.at(k));
    }
    int i(const std::string &k) const {
        double x = d(k);
        if (x != std::round(x)) {
            throw std::invalid_argument(k + ": expected an integer, got " + v.at(k));
        }
        return (int)x;
    }
};

using Row = std::vector<std::string>;

struct Column {
    std::string name;
    std::string unit;
};

struct Table {
    std::string file;
    std::vector<Column> columns;
    std::vector<Row> rows;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<std::pair<std::string, std::string>> keys;  // name, default; grid keys in sweep order
    std::set<std::string> scalar_keys;                      // keys that take exactly one value
    std::vector<Column> columns;
    std::function<void(const Point &)> validate;
    std::function<std::vector<Row>(const Point &, uint64_t seed)> run;
    std::function<std::optional<Table>(const std::vector<Point> &, const std::vector<std::vector<Row>> &)> finish;
};

// Truncation columns shared by every table.
const std::vector<Column> kTail{{"n_max", "photons per mode"}, {"tail_lost", "probability"}, {"tail_ok", "bool"}};

void append_tail(Row &r, int n_max, const TailCheck &t) {
    r.push_back(std::to_string(n_max));
    r.push_back(num(t.lost));
    r.push_back(t.ok ? "1" : "0");
}

std::vector<Column> with_tail(std::vector<Column> c) {
    c.insert(c.end(), kTail.begin(), kTail.end());
    return c;
}

cplx gamma_of(const Point &p) {
    return std::sqrt(p.d("gamma2"));
}

void require(bool ok, const std::string &msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

GateKind parse_gate(const std::string &g) {
    if (g == "Z") return GateKind::Z;
    if (g == "ZZ") return GateKind::ZZ;
    if (g == "X") return GateKind::X;
    if (g == "CNOT") return GateKind::CNOT;
    if (g == "Toffoli") return GateKind::Toffoli;
    throw std::invalid_argument("gate: unknown gate '" + g + "'");
}

Scheme parse_scheme(const std::string &s) {
    if (s == "dissipative") return Scheme::Dissipative;
    if (s == "hamiltonian") return Scheme::Hamiltonian;
    throw std::invalid_argument("scheme: expected dissipative or hamiltonian, got '" + s + "'");
}

// ---------------------------------------------------------------------------------------

Command gap_scan() {
    Command c;
    c.name = "gap-scan";
    c.help = "Energy gap of the Hamiltonian stabilizer per parity and photon-number difference";
    c.keys = {{"gamma2", "1:6:1"}, {"delta", "0,1,2,3"}, {"mu", "1,-1"}, {"K", "1"}, {"n_max", "-1"}};
    c.scalar_keys = {"K", "n_max"};
    c.columns = with_tail({{"gamma2", "|gamma|^2"},
                           {"delta", "photons"},
                           {"mu", "parity"},
                           {"gap_over_K", "1/K"},
                           {"ratio_to_8g6", "1"}});
    c.validate = [](const Point &p) {
        require(p.d("gamma2") > 0, "gamma2 must be positive");
        require(p.d("K") > 0, "K must be positive");
        require(std::abs(p.i("mu")) == 1, "mu must be 1 or -1");
        p.i("delta");
        p.i("n_max");
    };
    c.run = [](const Point &p, uint64_t) {
        cplx g = gamma_of(p);
        double K = p.d("K"), g2 = p.d("gamma2");
        int delta = p.i("delta");
        SpectrumResult s = block_spectrum(g, K, p.i("mu"), delta, p.i("n_max"));
        Row r{p.str("gamma2"), p.str("delta"), p.str("mu"), num(s.gap / K), num(s.gap / (8 * K * g2 * g2 * g2))};
        append_tail(r, s.n_max, tail_check(g, s.n_max - std::abs(delta)));
        return std::vector<Row>{r};
    };
    return c;
}

Command ham_search() {
    Command c;
    c.name = "ham-search";
    c.help = "Low-order Hamiltonians whose most excited manifold contains the code";
    c.keys = {{"max_order", "2,4,6"}, {"conserve_delta", "0"}, {"delta0", "0"}, {"n_max", "-1"}};
    c.scalar_keys = {"n_max"};
    c.columns = with_tail({{"max_order", "operator degree"},
                           {"conserve_delta", "bool"},
                           {"monomials", "count"},
                           {"common_dim", "count"},
                           {"max_dependent_dim", "count"},
                           {"max_residual", "1"},
                           {"summary", "text"}});
    c.validate = [](const Point &p) {
        int m = p.i("max_order");
        require(m >= 1 && m <= 10, "max_order must be in 1..10");
        int cd = p.i("conserve_delta");
        require(cd == 0 || cd == 1, "conserve_delta must be 0 or 1");
        p.i("delta0");
        p.i("n_max");
    };
    c.run = [](const Point &p, uint64_t) {
        std::vector<cplx> samples = default_gamma_samples();
        int delta0 = p.i("delta0"), nm = p.i("n_max");
        NullspaceResult res = search_low_order_hamiltonian(p.i("max_order"), delta0, samples,
                                                           p.i("conserve_delta") == 1, nm);
        int dep = 0;
        for (int x : res.dependent_dims) {
            dep = std::max(dep, x);
        }
        double resid = 0;
        for (double x : res.residuals) {
            resid = std::max(resid, x);
        }
        Row r{p.str("max_order"),
              p.str("conserve_delta"),
              std::to_string(res.monomials.size()),
              std::to_string(res.common.cols()),
              std::to_string(dep),
              num(resid),
              res.gamma_dependent ? "gamma-dependent solution" : "no gamma-dependent solution"};
        // Worst truncation over the gamma samples.
        int n_used = 0;
        TailCheck worst{0, true};
        for (cplx g : samples) {
            int n = nm > 0 ? nm : nmax_for(g) + std::abs(delta0);
            TailCheck t = tail_check(g, n - std::abs(delta0));
            n_used = std::max(n_used, n);
            worst.lost = std::max(worst.lost, t.lost);
            worst.ok = worst.ok && t.ok;
        }
        append_tail(r, n_used, worst);
        return std::vector<Row>{r};
    };
    return c;
}

Command tomography() {
    Command c;
    c.name = "tomography";
    c.help = "Pauli process matrix of the loss channel followed by recovery (both variants)";
    c.keys = {{"variant", "stabilized,lbc"}, {"gamma2", "0.25:6:0.25"}, {"eps", "0.02"}, {"k_max", "4"}, {"delta_max", "4"}};
    c.scalar_keys = {"k_max", "delta_max"};
    c.columns = with_tail({{"variant", "text"},
                           {"gamma2", "|gamma|^2"},
                           {"eps", "loss probability"},
                           {"r_II", "1"},
                           {"r_XX", "1"},
                           {"r_YY", "1"},
                           {"r_ZZ", "1"},
                           {"abs_r_IX", "1"},
                           {"abs_r_XI", "1"},
                           {"abs_r_YZ", "1"},
                           {"abs_r_ZY", "1"},
                           {"leakage", "probability"}});
    c.validate = [](const Point &p) {
        const std::string &v = p.str("variant");
        require(v == "stabilized" || v == "lbc", "variant must be stabilized or lbc");
        double eps = p.d("eps");
        require(eps >= 0 && eps < 1, "eps must be in [0, 1)");
        require(p.d("gamma2") >= 0, "gamma2 must be non-negative");
        require(v == "stabilized" || p.d("gamma2") > 0, "the lbc variant needs gamma2 > 0");
        require(p.i("k_max") >= 1 && p.i("delta_max") >= 1, "k_max and delta_max must be at least 1");
    };
    c.run = [](const Point &p, uint64_t) {
        cplx g = gamma_of(p);
        double eps = p.d("eps");
        int km = p.i("k_max"), dm = p.i("delta_max");
        PauliProcess pr;
        int n_max = 0;
        if (p.str("variant") == "stabilized") {
            StabilizedChannel ch = stabilized_loss_channel(g, -std::log1p(-eps), km, dm);
            pr = process_tomography([&](const Mat2 &r) { return RecoveryMap::apply_sector(ch.apply_logical(r), dm); });
            n_max = ch.basis.space.modes[0].n_max;
        } else {
            PairCatParams pp = PairCatParams::make(g, 0, nmax_for(g) + km);
            CodeFrame fr = code_frame(pp);
            KrausChannel kr = lbc_kraus(eps, km, pp.space);
            n_max = pp.space.modes[0].n_max;
            RecoveryMap rec = recovery_map(g, km, RecoveryVariant::Lbc, eps, n_max);
            Mat L = fr.logical_basis();
            pr = process_tomography([&](const Mat2 &r) { return rec.apply(kr.apply(L * r * L.adjoint())); });
        }
        Row r{p.str("variant"), p.str("gamma2"), p.str("eps"),
              num(pr.r(0, 0).real()), num(pr.r(1, 1).real()), num(pr.r(2, 2).real()), num(pr.r(3, 3).real()),
              num(std::abs(pr.r(0, 1))), num(std::abs(pr.r(1, 0))), num(std::abs(pr.r(2, 3))), num(std::abs(pr.r(3, 2))),
              num(pr.leakage)};
        append_tail(r, n_max, tail_check(g, n_max - km));
        return std::vector<Row>{r};
    };
    return c;
}

GateSpec gate_spec_of(const Point &p, uint64_t seed) {
    GateSpec s;
    s.kind = parse_gate(p.str("gate"));
    s.scheme = parse_scheme(p.str("scheme"));
    s.gamma = gamma_of(p);
    s.delta = p.i("delta");
    s.kappa = p.d("kappa");
    s.kappa1 = p.d("kappa1");
    s.T = p.d("T");
    s.theta = p.d("theta");
    s.dtau = p.d("dtau");
    s.seed = seed;
    s.n_max = p.i("n_max");
    if (p.v.count("trajectories")) {
        s.trajectories = p.i("trajectories");
    }
    if (p.v.count("steps")) {
        s.steps = p.i("steps");
    }
    return s;
}

Command gate_sim() {
    Command c;
    c.name = "gate-sim";
    c.help = "Open-system gate simulation with Pauli error probabilities; fit=1 adds optimal-time scaling fits";
    c.keys = {{"gate", "Z"},   {"scheme", "dissipative"}, {"gamma2", "4"},       {"delta", "0"},
              {"dtau", "0"},   {"theta", "1.5707963267948966"}, {"kappa1", "0"}, {"T", "10"},
              {"kappa", "1"},  {"trajectories", "0"},      {"steps", "0"},        {"n_max", "-1"},
              {"fit", "0"}};
    c.scalar_keys = {"kappa", "trajectories", "steps", "n_max", "fit"};
    c.columns = with_tail({{"gate", "text"},
                           {"scheme", "text"},
                           {"gamma2", "|gamma|^2"},
                           {"delta", "photons"},
                           {"dtau", "1/kappa"},
                           {"theta", "rad"},
                           {"kappa1", "kappa"},
                           {"T", "1/kappa"},
                           {"p_z1", "probability"},
                           {"p_z2", "probability"},
                           {"p_z1z2", "probability"},
                           {"p_nonz", "probability"},
                           {"p_total", "probability"},
                           {"leakage", "probability"},
                           {"predicted_total", "probability"},
                           {"n_traj", "count"}});
    c.validate = [](const Point &p) {
        GateKind k = parse_gate(p.str("gate"));
        require(k != GateKind::Toffoli, "gate-sim: Toffoli dynamics are not simulated; use predict");
        parse_scheme(p.str("scheme"));
        require(p.d("gamma2") > 0, "gamma2 must be positive");
        require(p.d("kappa") > 0, "kappa must be positive");
        require(p.d("kappa1") >= 0, "kappa1 must be non-negative");
        require(p.d("T") > 0, "T must be positive");
        require(p.i("trajectories") >= 0, "trajectories must be non-negative");
        require(!(k == GateKind::CNOT && p.d("kappa1") > 0 && p.i("trajectories") == 0),
                "CNOT with loss needs trajectories > 0");
        int f = p.i("fit");
        require(f == 0 || f == 1, "fit must be 0 or 1");
        p.i("delta");
        p.i("steps");
        p.i("n_max");
        p.d("dtau");
        p.d("theta");
    };
    c.run = [](const Point &p, uint64_t seed) {
        GateSpec s = gate_spec_of(p, seed);
        GateResult r;
        switch (s.kind) {
            case GateKind::Z:
                r = gate_z(s);
                break;
            case GateKind::ZZ:
                r = gate_zz(s);
                break;
            case GateKind::X:
                r = gate_x(s);
                break;
            default:
                r = gate_cnot(s).result;
                break;
        }
        double z1 = 0, z2 = 0, zz = 0, other = 0;
        bool two = r.num_qubits == 2;
        for (const auto &[label, v] : r.probabilities) {
            if (label.find_first_of("XY") != std::string::npos) {
                other += v;
            } else if (!two || label == "ZI") {
                z1 += v;
            } else if (label == "IZ") {
                z2 += v;
            } else {
                zz += v;
            }
        }
        std::string pred = "nan";
        try {
            pred = num(predict_error(r.spec).total);
        } catch (const std::exception &) {
        }
        Row row{p.str("gate"),   p.str("scheme"), p.str("gamma2"), p.str("delta"), p.str("dtau"),
                p.str("theta"),  p.str("kappa1"), p.str("T"),      num(z1),        two ? num(z2) : "",
                two ? num(zz) : "", num(other),   num(z1 + z2 + zz + other), num(r.leakage), pred,
                std::to_string(r.n_traj)};
        append_tail(row, r.n_max, TailCheck{r.tail_lost, r.tail_ok});
        return std::vector<Row>{row};
    };
    c.finish = [](const std::vector<Point> &pts, const std::vector<std::vector<Row>> &rows)
        -> std::optional<Table> {
        if (pts.empty() || pts[0].str("fit") != "1") {
            return std::nullopt;
        }
        Table t;
        t.file = "gate-sim-fit.csv";
        t.columns = with_tail({{"gate", "text"},
                               {"scheme", "text"},
                               {"gamma2", "|gamma|^2"},
                               {"delta", "photons"},
                               {"dtau", "1/kappa"},
                               {"theta", "rad"},
                               {"points", "count"},
                               {"exponent", "d log p_opt / d log kappa1"},
                               {"exponent_ci95", "1"},
                               {"r2", "1"},
                               {"note", "text"}});
        // group -> kappa1 -> (best total, n_max, tail)
        struct Best {
            double p = INFINITY;
            int n_max = 0;
            double lost = 0;
            bool ok = true;
        };
        std::map<std::vector<std::string>, std::map<double, Best>> groups;
        const size_t ncol = 16;
        for (size_t i = 0; i < rows.size(); i++) {
            for (const Row &r : rows[i]) {
                std::vector<std::string> key(r.begin(), r.begin() + 6);
                double k1 = std::stod(r[6]);
                if (k1 <= 0) {
                    continue;
                }
                Best &b = groups[key][k1];
                b.p = std::min(b.p, std::stod(r[12]));
                b.n_max = std::max(b.n_max, std::stoi(r[ncol]));
                b.lost = std::max(b.lost, std::stod(r[ncol + 1]));
                b.ok = b.ok && r[ncol + 2] == "1";
            }
        }
        for (const auto &[key, byk] : groups) {
            std::vector<double> x, y;
            Best agg;
            agg.p = 0;
            for (const auto &[k1, b] : byk) {
                x.push_back(k1);
                y.push_back(b.p);
                agg.n_max = std::max(agg.n_max, b.n_max);
                agg.lost = std::max(agg.lost, b.lost);
                agg.ok = agg.ok && b.ok;
            }
            Row r(key.begin(), key.end());
            r.push_back(std::to_string(x.size()));
            try {
                ScalingFit f = fit_scaling(x, y);
                r.push_back(num(f.exponent));
                r.push_back(num(f.exponent_ci));
                r.push_back(num(f.r2));
                r.push_back("");
            } catch (const std::exception &e) {
                r.insert(r.end(), {"nan", "nan", "nan", e.what()});
            }
            append_tail(r, agg.n_max, TailCheck{agg.lost, agg.ok});
            t.rows.push_back(r);
        }
        return t;
    };
    return c;
}

Command prep() {
    Command c;
    c.name = "prep";
    c.help = "Code-state preparation fidelity versus preparation time";
    c.keys = {{"scheme", "dissipative,hamiltonian"}, {"gamma2", "4"}, {"delta", "0"}, {"mu", "1,-1"},
              {"T", "0.5,1,2,5,10"}, {"kappa", "1"}, {"steps", "0"}, {"n_max", "-1"}};
    c.scalar_keys = {"kappa", "steps", "n_max"};
    c.columns = with_tail({{"scheme", "text"},
                           {"gamma2", "|gamma|^2"},
                           {"delta", "photons"},
                           {"mu", "parity"},
                           {"T", "1/kappa (or 1/K)"},
                           {"T_gap", "T kappa |gamma|^6"},
                           {"fidelity", "1"},
                           {"delta_mean", "photons"},
                           {"delta_spread", "photons"}});
    c.validate = [](const Point &p) {
        parse_scheme(p.str("scheme"));
        require(p.d("gamma2") > 0, "gamma2 must be positive");
        require(p.d("T") > 0, "T must be positive");
        require(p.d("kappa") > 0, "kappa must be positive");
        require(std::abs(p.i("mu")) == 1, "mu must be 1 or -1");
        p.i("delta");
        p.i("steps");
        p.i("n_max");
    };
    c.run = [](const Point &p, uint64_t) {
        GateSpec s;
        s.kind = GateKind::Prepare;
        s.scheme = parse_scheme(p.str("scheme"));
        s.gamma = gamma_of(p);
        s.delta = p.i("delta");
        s.T = p.d("T");
        s.kappa = p.d("kappa");
        s.steps = p.i("steps");
        s.n_max = p.i("n_max");
        PrepResult r = prepare_plus(s, p.i("mu"));
        double g2 = p.d("gamma2");
        Row row{p.str("scheme"), p.str("gamma2"), p.str("delta"), p.str("mu"), p.str("T"),
                num(s.T * s.kappa * g2 * g2 * g2), num(r.fidelity), num(r.delta_mean), num(r.delta_spread)};
        double lost = pair_tail(s.gamma, s.delta, r.n_max);
        append_tail(row, r.n_max, TailCheck{lost, lost < 1e-10});
        return std::vector<Row>{row};
    };
    return c;
}

Command predict() {
    Command c;
    c.name = "predict";
    c.help = "Closed-form gate error probabilities and optimal gate times (T=0 evaluates at the optimum)";
    c.keys = {{"gate", "Z,ZZ,X,CNOT,Toffoli"}, {"gamma2", "4"}, {"dtau", "0"}, {"kappa1", "1e-3"},
              {"T", "0"}, {"theta", "1.5707963267948966"}, {"kappa", "1"}};
    c.scalar_keys = {"kappa"};
    c.columns = with_tail({{"gate", "text"},
                           {"gamma2", "|gamma|^2"},
                           {"dtau", "1/kappa"},
                           {"kappa1", "kappa"},
                           {"theta", "rad"},
                           {"T", "1/kappa"},
                           {"label", "Pauli string, qubit 1 first"},
                           {"p", "probability"},
                           {"T_opt", "1/kappa"},
                           {"p_opt", "probability"}});
    c.validate = [](const Point &p) {
        parse_gate(p.str("gate"));
        require(p.d("gamma2") > 0, "gamma2 must be positive");
        require(p.d("kappa") > 0, "kappa must be positive");
        require(p.d("kappa1") >= 0, "kappa1 must be non-negative");
        require(p.d("T") >= 0, "T must be non-negative");
        p.d("dtau");
        p.d("theta");
    };
    c.run = [](const Point &p, uint64_t) {
        GateSpec s;
        s.kind = parse_gate(p.str("gate"));
        s.gamma = gamma_of(p);
        s.kappa = p.d("kappa");
        s.kappa1 = p.d("kappa1");
        s.dtau = p.d("dtau");
        s.theta = p.d("theta");
        s.T = p.d("T");
        Prediction opt = predict_error(s);
        double t_eval = s.T;
        if (t_eval == 0 && std::isfinite(opt.t_opt) && opt.t_opt > 0) {
            t_eval = opt.t_opt;
        }
        Prediction at = opt;
        if (t_eval > 0 && t_eval != s.T) {
            s.T = t_eval;
            at = predict_error(s);
        }
        std::vector<Row> rows;
        auto emit = [&](const std::string &label, double v) {
            Row r{p.str("gate"), p.str("gamma2"), p.str("dtau"), p.str("kappa1"), p.str("theta"),
                  num(t_eval),   label,           num(v),        num(opt.t_opt),  num(opt.p_opt)};
            r.insert(r.end(), {"na", "na", "na"});  // closed forms carry no truncation
            rows.push_back(r);
        };
        for (const auto &[label, v] : at.p) {
            emit(label, v);
        }
        emit("total", at.total);
        return rows;
    };
    return c;
}

std::vector<Command> commands() {
    return {gap_scan(), ham_search(), tomography(), gate_sim(), prep(), predict()};
}

// ---------------------------------------------------------------------------------------

std::string csv_escape(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string o = "\"";
    for (char ch : s) {
        if (ch == '"') {
            o += '"';
        }
        o += ch;
    }
    return o + "\"";
}

void write_header(std::ostream &o, const std::string &title, const std::vector<Column> &cols) {
    o << "# paircat-lab " << title << "\n# units:";
    for (size_t i = 0; i < cols.size(); i++) {
        o << (i ? "; " : " ") << cols[i].name << " [" << cols[i].unit << "]";
    }
    o << "\n";
    for (size_t i = 0; i < cols.size(); i++) {
        o << (i ? "," : "") << cols[i].name;
    }
    o << "\n";
}

void write_row(std::ostream &o, const Row &r) {
    for (size_t i = 0; i < r.size(); i++) {
        o << (i ? "," : "") << csv_escape(r[i]);
    }
    o << "\n";
}

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

int thread_count(int flag) {
    if (flag > 0) {
        return flag;
    }
    if (const char *e = std::getenv("PAIRCAT_THREADS")) {
        try {
            int n = std::stoi(e);
            if (n > 0) {
                return n;
            }
        } catch (const std::exception &) {
        }
    }
    return 1;
}

}  // namespace

std::map<std::string, std::string> read_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot read config file " + path);
    }
    std::map<std::string, std::string> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        no++;
        size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(no) + ": expected key = value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::vector<std::string> expand_list(const std::string &value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            throw std::invalid_argument("empty list item in '" + value + "'");
        }
        size_t c1 = item.find(':');
        if (c1 == std::string::npos) {
            out.push_back(item);
            continue;
        }
        size_t c2 = item.find(':', c1 + 1);
        if (c2 == std::string::npos) {
            throw std::invalid_argument("range needs start:stop:step, got '" + item + "'");
        }
        double a = parse_double("range", item.substr(0, c1));
        double b = parse_double("range", item.substr(c1 + 1, c2 - c1 - 1));
        double h = parse_double("range", item.substr(c2 + 1));
        if (h <= 0 || b < a) {
            throw std::invalid_argument("range needs start <= stop and step > 0: '" + item + "'");
        }
        int n = (int)std::floor((b - a) / h + 1e-9);
        if (n > 100000) {
            throw std::invalid_argument("range too long: '" + item + "'");
        }
        for (int k = 0; k <= n; k++) {
            out.push_back(num(a + k * h));
        }
    }
    return out;
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    std::vector<Command> cmds = commands();
    CLI::App app{"paircat-lab: pair-cat code numerical laboratory"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".";
    std::vector<std::string> sets;
    uint64_t seed = 1;
    int threads = 0;
    int max_order = -1;
    std::vector<CLI::App *> subs;
    for (const Command &c : cmds) {
        std::string desc = c.help + "\n  keys:";
        for (const auto &[k, v] : c.keys) {
            desc += " " + k + "=" + v;
        }
        CLI::App *s = app.add_subcommand(c.name, desc);
        s->add_option("--config", config_path, "flat key = value file");
        s->add_option("--set", sets, "override, key=value (lists: a,b or start:stop:step)");
        s->add_option("--out", out_dir, "output directory");
        s->add_option("--seed", seed, "base seed");
        s->add_option("--threads", threads, "worker threads (default: PAIRCAT_THREADS or 1)");
        if (c.name == "ham-search") {
            s->add_option("--max-order", max_order, "largest operator degree searched");
        }
        subs.push_back(s);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    size_t ci = 0;
    while (ci < subs.size() && !subs[ci]->parsed()) {
        ci++;
    }
    const Command &cmd = cmds[ci];

    namespace fs = std::filesystem;
    nlohmann::ordered_json manifest;
    manifest["tool"] = "paircat-lab";
    manifest["version"] = kVersion;
    manifest["subcommand"] = cmd.name;
    manifest["started"] = iso_now();
    auto t_start = std::chrono::steady_clock::now();
    auto write_manifest = [&](const std::string &status) {
        manifest["status"] = status;
        manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        std::ofstream m(fs::path(out_dir) / (cmd.name + ".manifest.json"));
        m << manifest.dump(2) << "\n";
    };

    // Resolve configuration: defaults, then file, then --set, then dedicated flags.
    std::map<std::string, std::string> cfg;
    for (const auto &[k, v] : cmd.keys) {
        cfg[k] = v;
    }
    std::vector<Point> points;
    try {
        auto apply = [&](const std::string &k, const std::string &v, const std::string &where) {
            if (!cfg.count(k)) {
                throw std::invalid_argument(where + ": unknown key '" + k + "' for " + cmd.name);
            }
            cfg[k] = v;
        };
        if (!config_path.empty()) {
            for (const auto &[k, v] : read_config(config_path)) {
                apply(k, v, config_path);
            }
        }
        for (const std::string &s : sets) {
            size_t eq = s.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("--set expects key=value, got '" + s + "'");
            }
            apply(trim(s.substr(0, eq)), trim(s.substr(eq + 1)), "--set");
        }
        if (max_order > 0) {
            apply("max_order", std::to_string(max_order), "--max-order");
        }
        manifest["config"] = cfg;
        manifest["seed"] = seed;

        // Cartesian grid, last key fastest.
        std::vector<std::pair<std::string, std::vector<std::string>>> axes;
        for (const auto &[k, def] : cmd.keys) {
            std::vector<std::string> vals = expand_list(cfg[k]);
            if (cmd.scalar_keys.count(k) && vals.size() != 1) {
                throw std::invalid_argument(k + " takes a single value");
            }
            axes.emplace_back(k, vals);
        }
        size_t total = 1;
        for (const auto &a : axes) {
            total *= a.second.size();
            if (total > 1000000) {
                throw std::invalid_argument("parameter grid too large");
            }
        }
        for (size_t idx = 0; idx < total; idx++) {
            Point p;
            size_t rem = idx;
            for (size_t a = axes.size(); a-- > 0;) {
                p.v[axes[a].first] = axes[a].second[rem % axes[a].second.size()];
                rem /= axes[a].second.size();
            }
            try {
                cmd.validate(p);
            } catch (const std::exception &e) {
                throw std::invalid_argument("grid point " + std::to_string(idx) + ": " + e.what());
            }
            points.push_back(p);
        }
    } catch (const std::exception &e) {
        err << "paircat-lab " << cmd.name << ": " << e.what() << "\n";
        manifest["error"] = e.what();
        write_manifest("invalid");
        return 2;
    }

    const size_t n = points.size();
    std::vector<uint64_t> seeds(n);
    for (size_t i = 0; i < n; i++) {
        seeds[i] = splitmix(seed ^ splitmix(i));
    }
    manifest["threads"] = thread_count(threads);
    manifest["run_seeds"] = seeds;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        err << "paircat-lab: cannot create " << out_dir << ": " << ec.message() << "\n";
        return 2;
    }
    std::ofstream csv(fs::path(out_dir) / (cmd.name + ".csv"));
    write_header(csv, cmd.name, cmd.columns);

    // Worker pool; rows are written in grid order by this thread only.
    std::vector<std::optional<std::vector<Row>>> results(n);
    std::vector<std::string> errors(n);
    std::vector<char> done(n, 0);
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<size_t> next{0};
    std::atomic<bool> abort{false};
    int active = 0;
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n || abort.load()) {
                std::lock_guard<std::mutex> lk(mu);
                active--;
                cv.notify_all();
                return;
            }
            std::optional<std::vector<Row>> rows;
            std::string msg;
            try {
                rows = cmd.run(points[i], seeds[i]);
            } catch (const std::exception &e) {
                msg = e.what();
                abort.store(true);
            }
            std::lock_guard<std::mutex> lk(mu);
            results[i] = std::move(rows);
            errors[i] = msg;
            done[i] = 1;
            cv.notify_all();
        }
    };
    int nt = std::min<int>(thread_count(threads), (int)std::max<size_t>(1, n));
    std::vector<std::thread> pool;
    active = nt;
    for (int t = 0; t < nt; t++) {
        pool.emplace_back(worker);
    }
    size_t written = 0;
    std::string failure;
    nlohmann::ordered_json trunc = nlohmann::ordered_json::array();
    const size_t tail_col = cmd.columns.size() - kTail.size();
    while (written < n) {
        std::unique_lock<std::mutex> lk(mu);
        cv.wait(lk, [&] { return done[written] || active == 0; });
        if (!done[written]) {
            // Aborted before this point was scheduled; wait for the stragglers to finish.
            lk.unlock();
            break;
        }
        if (!results[written]) {
            failure = errors[written];
            break;
        }
        for (const Row &r : *results[written]) {
            write_row(csv, r);
            trunc.push_back({{"run", written}, {"n_max", r[tail_col]}, {"tail_lost", r[tail_col + 1]},
                             {"tail_ok", r[tail_col + 2]}});
        }
        csv.flush();
        written++;
    }
    for (auto &t : pool) {
        t.join();
    }
    if (failure.empty() && written < n) {
        for (size_t i = written; i < n; i++) {
            if (done[i] && !results[i]) {
                failure = errors[i];
                break;
            }
        }
    }
    manifest["truncation"] = trunc;
    manifest["runs_completed"] = written;
    manifest["runs_total"] = n;
    if (written < n) {
        csv << "# partial: " << written << " of " << n << " runs; " << failure << "\n";
        err << "paircat-lab " << cmd.name << ": run " << written << " failed: " << failure << "\n";
        manifest["error"] = failure;
        write_manifest("partial");
        return 1;
    }
    std::vector<std::vector<Row>> all;
    for (auto &r : results) {
        all.push_back(*r);
    }
    if (cmd.finish) {
        if (std::optional<Table> t = cmd.finish(points, all)) {
            std::ofstream f(fs::path(out_dir) / t->file);
            write_header(f, t->file.substr(0, t->file.size() - 4), t->columns);
            for (const Row &r : t->rows) {
                write_row(f, r);
            }
            manifest["extra_tables"] = {t->file};
        }
    }
    write_manifest("ok");
    out << "paircat-lab " << cmd.name << ": " << n << " runs -> " << (fs::path(out_dir) / (cmd.name + ".csv")).string()
        << "\n";
    return 0;
}

}  // namespace paircat::cli
