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
#include <vector>

#include "momet/cost.hpp"
#include "momet/estimator.hpp"

namespace momet {

/// (w0, P, sigma_w, noise) of a Gaussian-shaped source.
struct GaussianParameters {
    double omega0 = 0.0;
    double power = 0.0;
    double spread = 0.0;
    double noise = 0.0;
};

/// Covariance model assuming a Gaussian power density:
///   R(theta) = P a a^H o B(sigma) + noise I,  [B]_{k,l} = exp(-(u_k - u_l)^2 sigma^2 / 2)
class GaussianShapeModel {
public:
    explicit GaussianShapeModel(ArrayGeometry geometry);

    const ArrayGeometry& geometry() const noexcept { return geometry_; }

    CMatrix shaping(double spread) const;
    // a a^H o B(sigma)
    CMatrix source_term(double omega, double spread) const;
    HermitianMatrix covariance(const GaussianParameters& theta) const;

private:
    ArrayGeometry geometry_;
    RMatrix u_sq_; // (u_k - u_l)^2
};

/// Estimates are returned in the moment layout of order 2, that is
/// alpha = (P, P sigma^2, noise), so that they can be tabulated next to
/// the moment-matching ones.
Estimate to_estimate(const GaussianParameters& theta);
GaussianParameters gaussian_parameters(const Estimate& estimate);

struct CometOptions {
    // Direction grid size over the ambiguity domain; 0 selects 8 M.
    int grid_points = 0;
    // Log-spaced spread grid over [resolution / 100, resolution].
    int spread_points = 64;
    // Number of direction-profile minima refined.
    int candidates = 3;
    // Coordinate-descent stopping step [rad].
    double tolerance = 1e-8;
    int max_iterations = 200;
    // Holds sigma fixed; 0 gives the point-source fit.
    std::optional<double> fixed_spread;
};

/// Weighted least-squares fit of GaussianShapeModel. (P, noise) are solved in
/// closed form for each (w0, sigma); (w0, sigma) come from a grid search then
/// a coordinate descent with sigma >= 0. The returned cost is J.
Estimate gaussian_comet_estimate(const HermitianMatrix& sample_cov, const ArrayGeometry& geometry,
                                 const Weighting& w, const CometOptions& options = {});

/// N (log det R(theta) + tr(R(theta)^{-1} R_N)); +inf when R(theta) is not
/// positive definite.
double gaussian_nll(const GaussianShapeModel& model, const GaussianParameters& theta,
                    const HermitianMatrix& sample_cov, double snapshots);

struct MlOptions {
    int max_iterations = 500; // per start
    double tolerance = 1e-10; // relative step
    std::vector<GaussianParameters> extra_starts;
};

/// Maximum-likelihood fit of GaussianShapeModel by multi-start coordinate
/// search with golden-section line searches. Starts are the moment-matching
/// D = 2 estimate, the point-source fit and the best point of the COMET grid,
/// plus any extra starts. The returned cost is the negative log-likelihood.
/// A start that hits the iteration cap is flagged in the diagnostics and its
/// best iterate is kept.
Estimate gaussian_ml_estimate(const HermitianMatrix& sample_cov, double snapshots, const ArrayGeometry& geometry,
                              const MlOptions& options = {});

} // namespace momet
