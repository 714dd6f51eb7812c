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
#include <span>
#include <vector>

#include "momet/cost.hpp"
#include "momet/estimator.hpp"
#include "momet/source.hpp"

namespace momet {

/// Large-sample behaviour of the estimator for a known population
/// covariance R. Parameter vectors are ordered (w0, P, nu_2..nu_D, noise).

/// J_inf(theta) = 1/2 ||R(theta) - R||_W^2
double asymptotic_cost(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& population,
                       const Weighting& w);

/// [g]_k = tr(W dR_k W (R(theta) - R))
RVector gradient_infty(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& population,
                       const Weighting& w);

/// [H]_{k,l} = tr(W d2R_{k,l} W (R(theta) - R)) + tr(W dR_k W dR_l)
RMatrix hessian_infty(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& population,
                      const Weighting& w);

/// [C0]_{k,l} = tr(W dR_k W R W dR_l W R), the covariance of sqrt(N) times
/// the sample-cost gradient for circular Gaussian snapshots.
RMatrix gradient_covariance_C0(const MomentModel& model, const ParameterVector& theta,
                               const HermitianMatrix& population, const Weighting& w);

/// theta_true in the moment layout: nu_d = P mu_d sigma^d from the density's
/// standardized moments.
ParameterVector true_parameters(const SourceTruth& truth, int order);

struct AccumulationOptions {
    SearchOptions search;
    int max_steps = 20;
    // Stop when ||grad J_inf|| <= gradient_tolerance * ||R||_W^2.
    double gradient_tolerance = 1e-12;
};

struct AccumulationPoint {
    ParameterVector theta;
    ParameterVector start;       // grid search and line refinement on R
    double gradient_norm = 0.0;  // at theta
    double threshold = 0.0;      // gradient_tolerance * ||R||_W^2
    int steps = 0;
    bool converged = false;
    // The polish moved w0 by more than half a grid step, so theta may lie
    // in a different basin than the grid pick.
    bool basin_changed = false;
};

/// theta_0 = argmin J_inf. The estimator is run on R itself, then polished by
/// Newton steps with the analytic gradient and Hessian (Gauss-Newton steps
/// where the Hessian is not positive definite), with step halving. The best
/// iterate is returned when the gradient threshold is not met.
AccumulationPoint accumulation_point(const MomentModel& model, const HermitianMatrix& population, const Weighting& w,
                                     const AccumulationOptions& options = {});

struct AsymptoticReport {
    ParameterVector theta0;
    std::optional<ParameterVector> truth;
    RVector bias;            // theta0 - theta_true, empty without a truth
    RMatrix hessian;         // H_inf(theta0)
    RMatrix c0;              // C0(theta0)
    RMatrix covariance;      // N C_N = H^-1 C0 H^-1
    double spread_variance = 0.0; // N var(sigma), delta method from (P, nu_2)
    double min_hessian_eigenvalue = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
    bool basin_changed = false;
    bool singular = false;

    /// sqrt(diag(C_N)) for N snapshots
    RVector standard_deviations(double snapshots) const;
};

AsymptoticReport asymptotic_covariance(const MomentModel& model, const HermitianMatrix& population, const Weighting& w,
                                       const AccumulationOptions& options = {});

/// As above with R built from the truth, and the bias filled in.
AsymptoticReport asymptotic_covariance(const MomentModel& model, const SourceTruth& truth, const Weighting& w,
                                       const AccumulationOptions& options = {});

struct BiasRow {
    double spread = 0.0;
    RVector bias;            // theta0 - theta_true
    double norm = 0.0;       // ||theta0 - theta_true||
    double spread_bias = 0.0; // sqrt(nu_2 / P) at theta0 minus sigma
    bool converged = false;
};

struct BiasCurve {
    int order = 0;
    std::vector<BiasRow> rows;
    // Log-log slopes over the lowest decade of spreads, using points whose
    // bias exceeds `floor`; NaN with fewer than two usable points.
    RVector slopes;          // per entry of theta
    double norm_slope = 0.0;
    double spread_slope = 0.0;
    double floor = 0.0;
};

/// Accumulation points over a list of positive ascending spreads; `truth`
/// supplies the density, direction, power and noise.
BiasCurve bias_curve(const MomentModel& model, const SourceTruth& truth, const Weighting& w,
                     std::span<const double> spreads, const AccumulationOptions& options = {});

/// Least-squares slope of log|y| against log x over points with x <= 10 x_min
/// and |y| > floor.
double loglog_slope(std::span<const double> x, std::span<const double> y, double floor);

} // namespace momet
