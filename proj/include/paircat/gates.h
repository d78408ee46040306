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

#ifndef PAIRCAT_GATES_H
#define PAIRCAT_GATES_H

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paircat/channels.h"
#include "paircat/paircat.h"
#include "paircat/sectors.h"

namespace paircat {

enum class GateKind { Prepare, MeasureX, Z, ZZ, X, CNOT, Toffoli };
enum class Scheme { Dissipative, Hamiltonian };

const char *gate_name(GateKind k);
const char *scheme_name(Scheme s);

struct GateSpec {
    GateKind kind = GateKind::Z;
    Scheme scheme = Scheme::Dissipative;
    cplx gamma = 2.0;
    int delta = 0;
    double kappa = 1;  // two-photon-pair dissipation rate, or K in the Hamiltonian scheme
    double kappa1 = 0;
    double eps = 0;  // |eps_Z| or |eps_ZZ|; 0 derives it from theta and T
    double theta = 1.5707963267948966;
    double T = 0;     // 0 derives it from theta and eps
    double dtau = 0;  // snapshot interval of the delta monitor; <= 0 disables monitoring
    uint64_t seed = 1;
    int n_max = -1;  // per mode; -1 picks dynamics_nmax
    int delta_span = 2;
    int substeps = 4;
    int steps = 0;  // Magnus / ramp steps; 0 picks a default

    // CNOT
    std::optional<double> inject_t0;  // deterministic loss insertion time
    char inject_mode = 'a';           // 'a' or 'b' on the target pair
    bool exact_feedback = false;      // correct the control phase from the exact insertion time
    int trajectories = 0;             // > 0 runs a quantum-jump ensemble instead
};

/// Fills eps / T from theta, picks n_max, and checks invariants. Throws std::invalid_argument.
GateSpec resolve(const GateSpec &spec);

struct GateResult {
    GateSpec spec;
    int num_qubits = 1;
    Mat superop;  // column-stacked logical map on the code, after recovery
    Mat target;   // ideal logical unitary
    Mat chi;      // Pauli process of target^dag o E
    std::vector<std::pair<std::string, double>> probabilities;  // non-identity Pauli strings
    double leakage = 0;
    double fidelity = 0;  // chi_II normalized by the trace kept in the code
    int n_max = 0;
    double tail_lost = 0;
    bool tail_ok = true;
    int n_traj = 0;
    double p_z_stderr = 0;  // trajectory ensembles only
    std::vector<std::string> flags;

    double p(const std::string &label) const;
    PauliProcess process() const;  // single-qubit results only
};

/// Builds chi, probabilities and fidelity for a logical superoperator against `target`.
void finish_result(GateResult &r, const Mat &superop, const Mat &target, double leakage);

struct PrepResult {
    double fidelity = 0;
    double delta_mean = 0;
    double delta_spread = 0;
    int n_max = 0;
    std::vector<std::string> flags;
};

/// Relaxes |0, delta> (mu = +1) or |1, delta + 1> (mu = -1) into |mu_{gamma,delta}>.
PrepResult prepare_plus(const GateSpec &spec, int mu = 1);

enum class MeasureVariant { OneAncilla, TwoAncilla };

struct MeasureXResult {
    int outcome = 1;
    StateVector post_state;
    bool error_flag = false;  // ancillas disagreed and the delta record could not arbitrate
    int delta_measured = 0;
};

MeasureXResult measure_x(const StateVector &state, int delta, double chi, double kappa1, MeasureVariant variant,
                         uint64_t seed);

/// Exact mis-assignment probability averaged over |+> and |->, from the master equation.
double measure_x_error(cplx gamma, int delta, double chi, double kappa1, MeasureVariant variant, int n_max = -1);

GateResult gate_z(const GateSpec &spec);
GateResult gate_zz(const GateSpec &spec);
GateResult gate_x(const GateSpec &spec);

struct CnotRun {
    GateResult result;
    Mat kraus;        // 4 x 4 logical no-jump branch (deterministic mode)
    double phase = 0; // arg of the control |1> phase relative to the loss-free run
    std::vector<double> row_fidelity;  // state fidelity of each basis row with the expected pattern
};

/// Deterministic mode (kappa1 = 0, optional inject_t0) or trajectory mode (trajectories > 0).
CnotRun gate_cnot(const GateSpec &spec);

/// Control phase picked up when a target-pair loss of the given mode happens at t0.
double cnot_loss_phase(double t0, double T, char mode);

struct ToffoliReport {
    int n_max = 0;
    int dim = 0;
    std::vector<SpMat> jumps;  // F1, F2, F3 at t = 0
    SpMat f3_static, f3_rotating;
    SpMat h_rot;
    // Residual |F3(t) psi| / |gamma|^4 per control configuration (x1 + 2 x2) and sampled time,
    // with the matching static or rotating target.
    std::vector<double> residual;
    std::vector<double> residual_code_basis;  // same with exact |0>_c, |1>_c controls
    double wrong_target_residual = 0;  // (1,1) controls with the static target
    double hrot_deviation = 0;         // |<11|H|11> + (pi/2T)(n3 - 2|g|^2)| on the target sector
    double hrot_scale = 0;             // pi / T
};

ToffoliReport toffoli_generators(const GateSpec &spec, int n_max = -1);

struct Prediction {
    std::vector<std::pair<std::string, double>> p;  // at spec.T
    double total = 0;
    double t_opt = 0;
    double p_opt = 0;
    std::vector<std::string> flags;

    double get(const std::string &label) const;
};

Prediction predict_error(const GateSpec &spec);

struct ScalingFit {
    double exponent = 0;
    double prefactor = 0;
    double exponent_ci = 0;  // 95% half-width
    double r2 = 0;
};

/// Log-log least squares y = c x^k. Needs >= 5 points spanning a decade in x.
ScalingFit fit_scaling(const std::vector<double> &x, const std::vector<double> &y);

/// y = A (1 + C x) by least squares; returns {A, C}.
std::pair<double, double> fit_bracket(const std::vector<double> &x, const std::vector<double> &y);

}  // namespace paircat

#endif
