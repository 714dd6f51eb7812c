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

#include "momet/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/toms748_solve.hpp>

#include "line_search.hpp"

namespace momet {

double direction_gradient(const MomentModel& model, double omega, const RVector& alpha,
                          const HermitianMatrix& sample_cov, const Weighting& w)
{
    const CVector a = steering_vector(model.geometry(), omega);
    const CMatrix r = (a * a.adjoint()).cwiseProduct(model.shaping(alpha));
    const CMatrix dr = model.direction_matrix().cwiseProduct(r);
    return weighted_inner(w, dr, r - sample_cov.matrix());
}

namespace {

// Sign-change root of dJ/dw0 around a golden-section estimate. The bracket
// grows by decades from `half_width` up to `max_width`, since very flat
// criteria (D close to D_max) leave the golden-section point further out.
std::optional<double> polish_direction(const FastConcentrator& conc, double omega, double half_width,
                                       double max_width)
{
    const auto& model = conc.model();
    auto grad = [&](double x) {
        return direction_gradient(model, x, conc.solve(x).alpha, conc.sample_covariance(), conc.weighting());
    };
    for (double h = half_width; h <= max_width; h *= 10.0) {
        const double lo = omega - h;
        const double hi = omega + h;
        const double glo = grad(lo);
        const double ghi = grad(hi);
        if (!(glo < 0.0 && ghi > 0.0))
            continue;
        std::uintmax_t iters = 100;
        const auto bracket = boost::math::tools::toms748_solve(grad, lo, hi, glo, ghi,
                                                               boost::math::tools::eps_tolerance<double>(50), iters);
        return 0.5 * (bracket.first + bracket.second);
    }
    return std::nullopt;
}

} // namespace

Estimate estimate(const MomentModel& model, const HermitianMatrix& sample_cov, const Weighting& w,
                  const SearchOptions& options)
{
    const auto& geometry = model.geometry();
    const FastConcentrator conc(model, sample_cov, w);

    const int grid = options.grid_points > 0 ? options.grid_points : static_cast<int>(8 * geometry.size());
    if (grid < 3)
        throw Error(ErrorCode::invalid_argument, "estimate: the search grid needs at least three points");

    const auto ra = resolution_ambiguity(geometry);
    double lo = -0.5 * ra.ambiguity;
    double hi = 0.5 * ra.ambiguity;
    if (options.domain) {
        lo = options.domain->first;
        hi = options.domain->second;
        if (!(hi > lo))
            throw Error(ErrorCode::invalid_argument, "estimate: empty search domain");
    }
    const bool periodic = !options.domain && geometry.is_ula() && geometry.spacing() >= 1.0 - 1e-12;
    const double period = 2.0 * pi / geometry.spacing();
    const double step = (hi - lo) / grid;

    std::vector<double> crit(static_cast<std::size_t>(grid));
    for (int i = 0; i < grid; ++i)
        crit[static_cast<std::size_t>(i)] = conc.criterion(lo + i * step);

    std::vector<int> maxima;
    const double neg_inf = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        const double c = crit[static_cast<std::size_t>(i)];
        const double left = i > 0 ? crit[static_cast<std::size_t>(i - 1)]
                                  : (periodic ? crit.back() : neg_inf);
        const double right = i + 1 < grid ? crit[static_cast<std::size_t>(i + 1)]
                                          : (periodic ? crit.front() : neg_inf);
        if (c >= left && c > right)
            maxima.push_back(i);
    }
    if (maxima.empty())
        maxima.push_back(static_cast<int>(std::max_element(crit.begin(), crit.end()) - crit.begin()));
    std::stable_sort(maxima.begin(), maxima.end(), [&](int a, int b) {
        return crit[static_cast<std::size_t>(a)] > crit[static_cast<std::size_t>(b)];
    });
    if (static_cast<int>(maxima.size()) > options.candidates)
        maxima.resize(static_cast<std::size_t>(std::max(1, options.candidates)));

    Estimate out;
    out.diagnostics.grid_points = grid;
    out.diagnostics.grid_step = step;
    out.diagnostics.notes = conc.notes();

    // J(w, alpha(w)) from the residual matrix; 1/2 ||R_N||^2 - 1/2 criterion
    // loses digits to cancellation when Y is poorly conditioned.
    auto concentrated_cost = [&](double x) {
        return cost(model, ParameterVector{x, conc.solve(x).alpha}, sample_cov, w);
    };

    for (int idx : maxima) {
        const double start = lo + idx * step;
        const auto line = detail::golden_section(concentrated_cost, start - step, start + step, options.tolerance);
        double omega = line.x;
        if (options.polish) {
            if (auto root = polish_direction(conc, omega, std::max(1e-6, 10.0 * options.tolerance), 0.5 * step)) {
                // J carries round-off of order eps ||R_N||_W sqrt(J); inside
                // that band the gradient root is the sharper location.
                const double noise = 1e-13 * std::sqrt(conc.weighted_norm_sq() * std::max(line.value, 0.0));
                if (concentrated_cost(*root) <= line.value + noise)
                    omega = *root;
            }
        }
        if (periodic)
            omega = lo + std::fmod(std::fmod(omega - lo, period) + period, period);

        const LinearSolution sol = conc.solve(omega);
        Candidate c;
        c.omega = omega;
        c.alpha = sol.alpha;
        c.condition = sol.condition;
        ParameterVector theta{omega, sol.alpha};
        c.cost = cost(model, theta, sample_cov, w);
        c.positive_power = theta.power() > 0.0;
        c.physically_valid = theta.physically_valid();
        if (sol.ill_conditioned)
            out.diagnostics.ill_conditioned = true;
        out.diagnostics.candidates.push_back(std::move(c));
    }

    const auto& cands = out.diagnostics.candidates;
    if (std::all_of(cands.begin(), cands.end(),
                    [](const Candidate& c) { return c.condition > ill_condition_threshold; }))
        throw Error(ErrorCode::ill_conditioned, "estimate: every candidate has an ill-conditioned linear solve");

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (!cands[i].positive_power)
            continue;
        if (!best || cands[i].cost < cands[*best].cost)
            best = i;
    }
    if (!best) {
        out.diagnostics.notes.emplace_back("all candidates have non-positive power");
        best = 0;
        for (std::size_t i = 1; i < cands.size(); ++i)
            if (cands[i].cost < cands[*best].cost)
                best = i;
    }

    const Candidate& pick = cands[*best];
    out.theta = ParameterVector{pick.omega, pick.alpha};
    out.cost = pick.cost;
    out.spread_sq = out.theta.spread_sq();
    out.spread = out.spread_sq >= 0.0 ? std::sqrt(out.spread_sq) : std::numeric_limits<double>::quiet_NaN();
    out.diagnostics.condition = pick.condition;
    out.diagnostics.ill_conditioned = pick.condition > ill_condition_threshold;
    out.diagnostics.physically_valid = pick.physically_valid;
    return out;
}

Estimate estimate(const HermitianMatrix& sample_cov, const ArrayGeometry& geometry, int order,
                  const WeightSpec& weight, const SearchOptions& options)
{
    const MomentModel model = build_model(geometry, order);
    return estimate(model, sample_cov, weight.resolve(sample_cov), options);
}

} // namespace momet
