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

#ifndef PAIRCAT_DYNAMICS_H
#define PAIRCAT_DYNAMICS_H

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "paircat/hilbert.h"

namespace paircat {

/// sum_k c_k(t) M_k. An empty coefficient means a constant 1.
struct TimeOperator {
    struct Term {
        SpMat op;
        std::function<cplx(double)> coef;
    };
    std::vector<Term> terms;

    TimeOperator() = default;
    explicit TimeOperator(SpMat op) {
        add(std::move(op));
    }
    TimeOperator &add(SpMat op, std::function<cplx(double)> coef = {});

    bool empty() const {
        return terms.empty();
    }
    bool time_dependent() const;
    SpMat at(double t) const;
    Mat apply(double t, const Mat &v) const;
    Mat apply_adjoint(double t, const Mat &v) const;
    /// Cheap upper bound on the 1-norm at time t.
    double norm_bound(double t) const;
};

struct JumpChannel {
    double rate = 0;
    TimeOperator op;
    std::string label;
};

/// Apply `op` at `time` inside an otherwise deterministic run.
struct JumpInjection {
    double time = 0;
    SpMat op;
    std::string label;
};

struct EvolutionSpec {
    double t_final = 0;
    double dt = 0;  // <= 0 picks a stable step from the generator norms
    bool stiff = false;  // trajectories: SDIRK2 drift at dt (needs dt > 0)
    TimeOperator hamiltonian;
    std::vector<JumpChannel> jumps;
    std::vector<JumpInjection> injections;
};

struct MonitorOutcome {
    double time;
    double value;
};

struct Correction {
    SpMat unitary;
    double angle = 0;
};

struct MonitorSpec {
    double interval = 0;
    SpMat observable;  // must be diagonal
    std::function<std::optional<Correction>(const std::vector<MonitorOutcome> &, double)> feedback;
};

struct TrajectoryRecord {
    std::vector<std::pair<double, int>> jumps;  // injected jumps carry index -1 - k
    std::vector<MonitorOutcome> outcomes;
    std::vector<std::pair<double, double>> corrections;

    bool operator==(const TrajectoryRecord &o) const;
};

struct TrajectoryResult {
    Vec psi;
    TrajectoryRecord record;
};

class StepSizeError : public std::runtime_error {
   public:
    StepSizeError(const std::string &msg, double suggested) : std::runtime_error(msg), suggested_dt(suggested) {
    }
    double suggested_dt;
};

/// Step size actually used for a spec (honours spec.dt when positive). `pure` sizes the step
/// for state-vector propagation, whose stiffness is half that of the Liouvillian.
double choose_dt(const EvolutionSpec &spec, double t = 0, bool pure = false);

/// Lindblad drift -i[H, rho] + sum_j k_j D[L_j] rho for arbitrary (non-Hermitian) rho.
Mat lindblad_rhs(const EvolutionSpec &spec, double t, const Mat &rho);

/// Fixed-step RK4 on the master equation. With `hermitian` the state is symmetrized
/// every step; tomography of operator inputs passes false.
Mat evolve_master(const Mat &rho0, const EvolutionSpec &spec, bool hermitian = true);
DensityMatrix evolve_master(const DensityMatrix &rho0, const EvolutionSpec &spec);

/// Column-stacked superoperator at time t.
Mat liouvillian(const EvolutionSpec &spec, double t);

/// Exact exp(L t_final) rho0 for a time-independent spec (dense, small spaces only).
Mat evolve_master_exact(const Mat &rho0, const EvolutionSpec &spec);

/// Deterministic linear propagation of the columns of psi0 under H - (i/2) sum k L^dag L
/// with injections applied in place. No renormalization, so the result is a linear map.
Mat propagate(const Mat &psi0, const EvolutionSpec &spec);

/// Same map by L-stable SDIRK2 steps of size dt (sparse LU per stage). For stiff generators
/// whose fast modes only need to decay, not to be resolved.
Mat propagate_stiff(const Mat &psi0, const EvolutionSpec &spec, double dt);

/// Quantum-jump unravelling. Deterministic for a given seed.
TrajectoryResult evolve_trajectory(const Vec &psi0, const EvolutionSpec &spec, const MonitorSpec *monitor,
                                   uint64_t seed);

struct BlockTrajectoryResult {
    Mat psi;  // Frobenius norm 1
    TrajectoryRecord record;
};

/// Same unravelling for a system entangled with a spectator reference: the columns of psi0 are
/// the system states paired with orthonormal reference states. Jump rates use the Frobenius norm.
BlockTrajectoryResult evolve_trajectory(const Mat &psi0, const EvolutionSpec &spec, const MonitorSpec *monitor,
                                        uint64_t seed);

/// psi' = -i H(t) psi by fourth-order Magnus steps with dense exponentials. H may be non-Hermitian.
Mat evolve_magnus(const Mat &psi0, const TimeOperator &hamiltonian, double t_final, int steps);

/// Relaxes until max|drho/dt| < tol or spec.t_final is reached (then throws). Small
/// time-independent problems use exact Liouvillian exponentials, others RK4.
Mat steady_state(const Mat &rho0, const EvolutionSpec &spec, double tol);

}  // namespace paircat

#endif
