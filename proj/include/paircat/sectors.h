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

#ifndef PAIRCAT_SECTORS_H
#define PAIRCAT_SECTORS_H

#include <functional>
#include <map>
#include <vector>

#include "paircat/hilbert.h"

namespace paircat {

/// One mode pair restricted to n_b - n_a = delta, both modes cut at n_max. Local index n
/// labels |n, n + delta> for delta >= 0 and |n + |delta|, n> otherwise, so n is always the
/// occupation of the mode that carries the code parity.
struct PairSector {
    int delta = 0;
    int n_max = 0;

    int dim() const {
        return n_max - std::abs(delta) + 1;
    }
    int n_a(int n) const {
        return delta >= 0 ? n : n - delta;
    }
    int n_b(int n) const {
        return delta >= 0 ? n + delta : n;
    }
};

/// Smallest per-mode cutoff whose pair-coherent tail is below tol, plus `margin` levels of
/// headroom for excitations out of the code space.
int dynamics_nmax(cplx gamma, double tol = 1e-12, int margin = 4);

/// Weight of the pair-coherent state |gamma_delta> above the per-mode cutoff n_max.
double pair_tail(cplx gamma, int delta, int n_max);

SpMat sector_ab(const PairSector &s);
SpMat sector_a2b2(const PairSector &s);
SpMat sector_number(const PairSector &s);  // n_a + n_b
/// a maps sector delta into delta + 1, b maps it into delta - 1.
SpMat sector_a(const PairSector &from);
SpMat sector_b(const PairSector &from);

/// Normalized |mu_{gamma,delta}> in sector coordinates.
Vec sector_code_state(cplx gamma, const PairSector &s, int mu);
/// dim x 2 columns |0>_c, |1>_c.
Mat sector_logical_basis(cplx gamma, const PairSector &s);

/// Static generator inside one block of fixed per-pair deltas.
struct SectorGenerator {
    SpMat h;
    std::vector<std::pair<double, SpMat>> jumps;
};

/// Conditional master equation resolved by photon-number-difference sector and by the
/// monitoring record. Loss on a_j, b_j moves pair j between sectors; snapshots of the
/// monitored pairs' deltas every dtau update each branch's record, and at the end every
/// branch is recovered to the home code with the parity rule its record implies.
struct SectorModel {
    int num_pairs = 1;
    int n_max = 0;
    std::vector<cplx> gamma;  // code amplitude per pair
    std::vector<int> delta0;  // home sector per pair
    int delta_span = 2;       // |delta - delta0| kept per pair; loss beyond is dropped
    double kappa1 = 0;
    double t_final = 0;
    double dtau = 0;  // <= 0: no snapshots before t_final
    std::vector<bool> monitored;
    int substeps = 8;  // steps per snapshot interval (or over t_final without snapshots)
    /// Blocks up to this dimension use dense exact propagators; larger ones use two-stage
    /// L-stable SDIRK with a sparse LU per block. Loss is Strang-split around either.
    int exact_max_dim = 40;
    /// SDIRK step limit (0: t_final / 200).
    double implicit_dt = 0;
    std::function<SectorGenerator(const std::vector<int> &deltas)> generator;
    /// Optional unitary applied to each block before recovery.
    std::function<SpMat(const std::vector<int> &deltas)> final_unitary;
};

struct SectorChannel {
    Mat superop;             // column-stacked map on the 2^P logical space
    double leakage = 0;      // 1 - trace after recovery, averaged over basis inputs
    double dropped = 0;      // trace carried out of the kept delta window
    std::vector<int> dims;   // block dimensions at delta0
    int num_branches = 0;    // records alive at the end
};

SectorChannel run_sector_channel(const SectorModel &model);

}  // namespace paircat

#endif
