// SPDX-License-Identifier: Apache-2.0
//
// momet: moment-matching estimation of narrow diffuse sources
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "momet/concentrator.hpp"
#include "momet/cost.hpp"
#include "momet/model.hpp"

namespace momet {

struct SearchOptions {
    // Coarse grid size over the ambiguity domain; 0 selects 8 M.
    int grid_points = 0;
    // Number of best grid maxima refined.
    int candidates = 3;
    // Width of the final refinement bracket [rad].
    double tolerance = 1e-10;
    // Root-polish dJ/dw0 after the golden-section stage.
    bool polish = true;
    // Overrides the search interval [lo, hi).
    std::optional<std::pair<double, double>> domain;
};

struct Candidate {
    double omega = 0.0;
    double cost = 0.0;
    RVector alpha;
    double condition = 1.0;
    bool positive_power = false;
    bool physically_valid = false;
    bool converged = true;
};

struct EstimateDiagnostics {
    int grid_points = 0;
    double grid_step = 0.0;
    double condition = 1.0; // of Y at the returned direction
    bool ill_conditioned = false;
    bool physically_valid = false;
    // iterative refiners only (baselines)
    bool converged = true;
    int iterations = 0;
    std::vector<Candidate> candidates; // refined, in grid-rank order
    std::vector<std::string> notes;
};

struct Estimate {
    ParameterVector theta;
    double spread_sq = 0.0; // nu_2 / P, may be negative at finite N
    double spread = 0.0;    // sqrt(spread_sq), NaN when spread_sq < 0
    double cost = 0.0;
    EstimateDiagnostics diagnostics;
};

/// Moment-matching estimate from a sample covariance:
///   1. criterion y^T Y^{-1} y on a uniform grid over the ambiguity domain;
///   2. the best `candidates` local maxima refined by golden section on the
///      concentrated cost, then a root polish of dJ/dw0;
///   3. linear parameters at each refined direction; candidates with P <= 0
///      are the half-period ambiguity and lose to any positive-power one.
/// The best positive-power candidate by cost is returned. If none has
/// positive power, the lowest-cost one is returned with the validity flag
/// cleared.
Estimate estimate(const MomentModel& model, const HermitianMatrix& sample_cov, const Weighting& w,
                  const SearchOptions& options = {});

Estimate estimate(const HermitianMatrix& sample_cov, const ArrayGeometry& geometry, int order,
                  const WeightSpec& weight, const SearchOptions& options = {});

/// dJ/dw0 at (w, alpha).
double direction_gradient(const MomentModel& model, double omega, const RVector& alpha,
                          const HermitianMatrix& sample_cov, const Weighting& w);

} // namespace momet
