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

#include "momet/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "line_search.hpp"

namespace momet {

GaussianShapeModel::GaussianShapeModel(ArrayGeometry geometry) : geometry_(std::move(geometry))
{
    const auto& u = geometry_.positions();
    const Index m = geometry_.size();
    u_sq_.resize(m, m);
    for (Index k = 0; k < m; ++k)
        for (Index l = 0; l < m; ++l) {
            const double d = u[static_cast<std::size_t>(k)] - u[static_cast<std::size_t>(l)];
            u_sq_(k, l) = d * d;
        }
}

CMatrix GaussianShapeModel::shaping(double spread) const
{
    return (-0.5 * spread * spread * u_sq_.array()).exp().matrix().cast<cplx>();
}

CMatrix GaussianShapeModel::source_term(double omega, double spread) const
{
    const CVector a = steering_vector(geometry_, omega);
    return (a * a.adjoint()).cwiseProduct(shaping(spread));
}

HermitianMatrix GaussianShapeModel::covariance(const GaussianParameters& theta) const
{
    CMatrix r = theta.power * source_term(theta.omega0, theta.spread);
    r.diagonal().array() += theta.noise;
    return HermitianMatrix(r);
}

Estimate to_estimate(const GaussianParameters& theta)
{
    Estimate out;
    RVector alpha(3);
    alpha << theta.power, theta.power * theta.spread * theta.spread, theta.noise;
    out.theta = ParameterVector{theta.omega0, alpha};
    out.spread_sq = theta.spread * theta.spread;
    out.spread = theta.spread;
    out.diagnostics.physically_valid = theta.power > 0.0 && theta.spread >= 0.0 && theta.noise >= 0.0;
    return out;
}

GaussianParameters gaussian_parameters(const Estimate& estimate)
{
    return GaussianParameters{estimate.theta.omega0, estimate.theta.power(), estimate.spread,
                              estimate.theta.noise()};
}

namespace {

struct SearchDomain {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;
    int points = 0;
    bool periodic = false;
    double period = 0.0;
    double resolution = 0.0;

    double wrap(double omega) const
    {
        return periodic ? lo + std::fmod(std::fmod(omega - lo, period) + period, period) : omega;
    }
};

SearchDomain search_domain(const ArrayGeometry& geometry, int grid_points)
{
    SearchDomain d;
    const auto ra = resolution_ambiguity(geometry);
    d.points = grid_points > 0 ? grid_points : static_cast<int>(8 * geometry.size());
    if (d.points < 3)
        throw Error(ErrorCode::invalid_argument, "baselines: the search grid needs at least three points");
    d.lo = -0.5 * ra.ambiguity;
    d.hi = 0.5 * ra.ambiguity;
    d.step = (d.hi - d.lo) / d.points;
    d.periodic = geometry.is_ula() && geometry.spacing() >= 1.0 - 1e-12;
    d.period = 2.0 * pi / geometry.spacing();
    d.resolution = ra.resolution;
    return d;
}

std::vector<double> spread_grid(double resolution, int points)
{
    if (points < 2)
        throw Error(ErrorCode::invalid_argument, "baselines: the spread grid needs at least two points");
    std::vector<double> s(static_cast<std::size_t>(points));
    const double lo = std::log(resolution / 100.0);
    const double hi = std::log(resolution);
    for (int i = 0; i < points; ++i)
        s[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (points - 1));
    return s;
}

// (P, noise) for fixed (w0, sigma) and the resulting cost.
struct LinearFit {
    double power = 0.0;
    double noise = 0.0;
    double cost = 0.0;
};

LinearFit fit_linear(const GaussianShapeModel& model, double omega, double spread, const HermitianMatrix& sample_cov,
                     const Weighting& w)
{
    const CMatrix g = model.source_term(omega, spread);
    const CMatrix id = CMatrix::Identity(g.rows(), g.cols());
    GramSystem sys;
    sys.gram.resize(2, 2);
    sys.gram(0, 0) = weighted_inner(w, g, g);
    sys.gram(0, 1) = sys.gram(1, 0) = weighted_inner(w, g, id);
    sys.gram(1, 1) = weighted_inner(w, id, id);
    sys.rhs.resize(2);
    sys.rhs(0) = weighted_inner(w, g, sample_cov.matrix());
    sys.rhs(1) = weighted_inner(w, id, sample_cov.matrix());
    const LinearSolution sol = solve_gram(sys);
    LinearFit fit;
    fit.power = sol.alpha(0);
    fit.noise = sol.alpha(1);
    CMatrix residual = sample_cov.matrix() - fit.power * g;
    residual.diagonal().array() -= fit.noise;
    fit.cost = 0.5 * weighted_inner(w, residual, residual);
    return fit;
}

// One coordinate move: golden section over [max(lower, x - h), x + h]. The
// bracket is widened while the minimum sits on an open edge, and shrunk
// around the step actually taken. Never returns a worse point than x.
template <class F>
double coordinate_move(F&& f, double x, double& h, double lower, double tol, double& fx)
{
    for (int grow = 0; grow < 30; ++grow) {
        const double a = std::max(lower, x - h);
        const double b = x + h;
        auto m = detail::golden_section(f, a, b, tol);
        if (a == lower) {
            const double fl = f(lower);
            if (fl <= m.value)
                m = detail::LineMinimum{lower, fl, m.evaluations + 1};
        }
        const double edge = 0.02 * (b - a);
        const bool open_edge = (a > lower && m.x - a < edge) || (b - m.x < edge);
        if (m.value < fx) {
            const double step = std::abs(m.x - x);
            x = m.x;
            fx = m.value;
            if (!open_edge) {
                h = std::max(4.0 * step, 10.0 * tol);
                return x;
            }
        } else if (!open_edge) {
            h = std::max(0.25 * h, 10.0 * tol);
            return x;
        }
        h *= 4.0;
    }
    return x;
}

Candidate comet_candidate(const GaussianParameters& p, double cost, bool converged)
{
    Candidate c;
    c.omega = p.omega0;
    c.cost = cost;
    c.alpha = to_estimate(p).theta.linear;
    c.positive_power = p.power > 0.0;
    c.physically_valid = c.positive_power && p.noise >= 0.0;
    c.converged = converged;
    return c;
}

std::size_t pick_candidate(const std::vector<Candidate>& cands)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (cands[i].positive_power && (!best || cands[i].cost < cands[*best].cost))
            best = i;
    if (best)
        return *best;
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
        if (cands[i].cost < cands[i0].cost)
            i0 = i;
    return i0;
}

struct GridPoint {
    double omega = 0.0;
    double spread = 0.0;
    double value = 0.0;
};

// Per-direction best spread on the (w0, sigma) grid, then the best local
// minima of that profile.
template <class F>
std::vector<GridPoint> grid_minima(F&& value, const SearchDomain& d, const std::vector<double>& spreads, int keep)
{
    std::vector<GridPoint> profile(static_cast<std::size_t>(d.points));
    for (int i = 0; i < d.points; ++i) {
        GridPoint best{d.lo + i * d.step, spreads.front(), std::numeric_limits<double>::infinity()};
        for (double s : spreads) {
            const double v = value(best.omega, s);
            if (v < best.value) {
                best.spread = s;
                best.value = v;
            }
        }
        profile[static_cast<std::size_t>(i)] = best;
    }
    std::vector<GridPoint> minima;
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d.points; ++i) {
        const double v = profile[static_cast<std::size_t>(i)].value;
        const double left = i > 0 ? profile[static_cast<std::size_t>(i - 1)].value : (d.periodic ? profile.back().value : inf);
        const double right = i + 1 < d.points ? profile[static_cast<std::size_t>(i + 1)].value
                                              : (d.periodic ? profile.front().value : inf);
        if (v <= left && v < right)
            minima.push_back(profile[static_cast<std::size_t>(i)]);
    }
    if (minima.empty())
        minima.push_back(*std::min_element(profile.begin(), profile.end(),
                                           [](const GridPoint& a, const GridPoint& b) { return a.value < b.value; }));
    std::stable_sort(minima.begin(), minima.end(), [](const GridPoint& a, const GridPoint& b) { return a.value < b.value; });
    if (static_cast<int>(minima.size()) > keep)
        minima.resize(static_cast<std::size_t>(std::max(1, keep)));
    return minima;
}

} // namespace

Estimate gaussian_comet_estimate(const HermitianMatrix& sample_cov, const ArrayGeometry& geometry, const Weighting& w,
                                 const CometOptions& options)
{
    if (sample_cov.size() != geometry.size() || w.size() != geometry.size())
        throw Error(ErrorCode::invalid_argument, "gaussian_comet_estimate: dimension mismatch");
    if (options.fixed_spread && !(*options.fixed_spread >= 0.0))
        throw Error(ErrorCode::invalid_argument, "gaussian_comet_estimate: fixed spread must be non-negative");

    const GaussianShapeModel model(geometry);
    const SearchDomain d = search_domain(geometry, options.grid_points);
    const std::vector<double> spreads = options.fixed_spread ? std::vector<double>{*options.fixed_spread}
                                                             : spread_grid(d.resolution, options.spread_points);
    auto value = [&](double omega, double spread) { return fit_linear(model, omega, spread, sample_cov, w).cost; };

    Estimate out;
    out.diagnostics.grid_points = d.points;
    out.diagnostics.grid_step = d.step;
    const auto starts = grid_minima(value, d, spreads, options.candidates);

    std::vector<GaussianParameters> refined;
    for (const auto& start : starts) {
        double omega = start.omega;
        double spread = start.spread;
        double f = start.value;
        double h_omega = d.step;
        double h_spread = spread;
        const double tol = 0.1 * options.tolerance;
        bool converged = false;
        int it = 0;
        for (; it < options.max_iterations; ++it) {
            const double omega_prev = omega;
            const double spread_prev = spread;
            omega = coordinate_move([&](double x) { return value(x, spread); }, omega, h_omega,
                                    -std::numeric_limits<double>::infinity(), tol, f);
            if (!options.fixed_spread)
                spread = coordinate_move([&](double s) { return value(omega, s); }, spread, h_spread, 0.0, tol, f);
            if (std::abs(omega - omega_prev) < options.tolerance && std::abs(spread - spread_prev) < options.tolerance) {
                converged = true;
                break;
            }
        }
        omega = d.wrap(omega);
        const LinearFit fit = fit_linear(model, omega, spread, sample_cov, w);
        const GaussianParameters p{omega, fit.power, spread, fit.noise};
        out.diagnostics.candidates.push_back(comet_candidate(p, fit.cost, converged));
        out.diagnostics.iterations = std::max(out.diagnostics.iterations, it + 1);
        refined.push_back(p);
    }

    const std::size_t best = pick_candidate(out.diagnostics.candidates);
    const Candidate& pick = out.diagnostics.candidates[best];
    auto diagnostics = std::move(out.diagnostics);
    out = to_estimate(refined[best]);
    out.cost = pick.cost;
    out.diagnostics = std::move(diagnostics);
    out.diagnostics.converged = pick.converged;
    out.diagnostics.physically_valid = pick.physically_valid;
    if (!pick.positive_power)
        out.diagnostics.notes.emplace_back("all candidates have non-positive power");
    if (!out.diagnostics.converged)
        out.diagnostics.notes.emplace_back("coordinate descent hit the iteration cap");
    return out;
}

double gaussian_nll(const GaussianShapeModel& model, const GaussianParameters& theta, const HermitianMatrix& sample_cov,
                    double snapshots)
{
    if (!(theta.power >= 0.0) || !(theta.spread >= 0.0) || !(theta.noise >= 0.0))
        return std::numeric_limits<double>::infinity();
    const Eigen::LLT<CMatrix> llt(model.covariance(theta).matrix());
    if (llt.info() != Eigen::Success)
        return std::numeric_limits<double>::infinity();
    double logdet = 0.0;
    for (Index i = 0; i < sample_cov.size(); ++i) {
        const double lii = std::real(llt.matrixLLT()(i, i));
        if (!(lii > 0.0))
            return std::numeric_limits<double>::infinity();
        logdet += 2.0 * std::log(lii);
    }
    const CMatrix x = llt.solve(sample_cov.matrix());
    return snapshots * (logdet + x.trace().real());
}

Estimate gaussian_ml_estimate(const HermitianMatrix& sample_cov, double snapshots, const ArrayGeometry& geometry,
                              const MlOptions& options)
{
    if (sample_cov.size() != geometry.size())
        throw Error(ErrorCode::invalid_argument, "gaussian_ml_estimate: dimension mismatch");
    if (!(snapshots > 0.0))
        throw Error(ErrorCode::invalid_argument, "gaussian_ml_estimate: the snapshot count must be positive");

    const GaussianShapeModel model(geometry);
    const Weighting identity = Weighting::identity(geometry.size());
    const SearchDomain d = search_domain(geometry, 0);
    auto nll = [&](const GaussianParameters& p) { return gaussian_nll(model, p, sample_cov, snapshots); };

    std::vector<GaussianParameters> starts;
    std::vector<std::string> notes;
    try {
        const Estimate mm = estimate(sample_cov, geometry, 2, WeightSpec::identity());
        starts.push_back({mm.theta.omega0, mm.theta.power(), std::sqrt(std::max(mm.spread_sq, 0.0)), mm.theta.noise()});
    } catch (const Error& e) {
        notes.emplace_back(std::string("moment-matching start unavailable: ") + e.what());
    }
    CometOptions point;
    point.fixed_spread = 0.0;
    starts.push_back(gaussian_parameters(gaussian_comet_estimate(sample_cov, geometry, identity, point)));
    {
        auto value = [&](double omega, double spread) {
            const LinearFit fit = fit_linear(model, omega, spread, sample_cov, identity);
            return nll(GaussianParameters{omega, fit.power, spread, fit.noise});
        };
        const auto g = grid_minima(value, d, spread_grid(d.resolution, 64), 1).front();
        const LinearFit fit = fit_linear(model, g.omega, g.spread, sample_cov, identity);
        starts.push_back({g.omega, fit.power, g.spread, fit.noise});
    }
    starts.insert(starts.end(), options.extra_starts.begin(), options.extra_starts.end());

    const double level = std::max(sample_cov.trace() / static_cast<double>(sample_cov.size()), 1e-300);
    Estimate out;
    out.diagnostics.grid_points = d.points;
    out.diagnostics.grid_step = d.step;
    out.diagnostics.notes = std::move(notes);
    std::vector<GaussianParameters> finals;
    for (GaussianParameters p : starts) {
        p.power = std::max(p.power, 1e-6 * level);
        p.noise = std::max(p.noise, 1e-6 * level);
        p.spread = std::max(p.spread, 0.0);
        double f = nll(p);
        if (!std::isfinite(f))
            continue;

        std::array<double*, 4> x{&p.omega0, &p.power, &p.spread, &p.noise};
        const std::array<double, 4> lower{-std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0};
        const std::array<double, 4> scale{1.0, std::max(p.power, level), d.resolution, std::max(p.noise, 1e-3 * level)};
        std::array<double, 4> h{d.step, 0.5 * scale[1], std::max(p.spread, 0.1 * d.resolution), 0.5 * scale[3]};
        bool converged = false;
        int it = 0;
        for (; it < options.max_iterations; ++it) {
            const GaussianParameters before = p;
            const double f_before = f;
            for (std::size_t i = 0; i < 4; ++i) {
                auto line = [&](double v) {
                    const double keep = *x[i];
                    *x[i] = v;
                    const double r = nll(p);
                    *x[i] = keep;
                    return r;
                };
                *x[i] = coordinate_move(line, *x[i], h[i], lower[i], 0.1 * options.tolerance * scale[i], f);
            }
            // Pattern move along the sweep displacement.
            const std::array<double, 4> delta{p.omega0 - before.omega0, p.power - before.power,
                                              p.spread - before.spread, p.noise - before.noise};
            auto along = [&](double t) {
                GaussianParameters q{p.omega0 + t * delta[0], p.power + t * delta[1], p.spread + t * delta[2],
                                     p.noise + t * delta[3]};
                return nll(q);
            };
            const auto m = detail::golden_section(along, -0.5, 4.0, 1e-6);
            if (m.value < f) {
                p = GaussianParameters{p.omega0 + m.x * delta[0], p.power + m.x * delta[1], p.spread + m.x * delta[2],
                                       p.noise + m.x * delta[3]};
                f = m.value;
            }
            double step = 0.0;
            step = std::max(step, std::abs(p.omega0 - before.omega0) / scale[0]);
            step = std::max(step, std::abs(p.power - before.power) / scale[1]);
            step = std::max(step, std::abs(p.spread - before.spread) / scale[2]);
            step = std::max(step, std::abs(p.noise - before.noise) / scale[3]);
            if (step < options.tolerance || f_before - f <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f)) {
                converged = true;
                break;
            }
        }
        p.omega0 = d.wrap(p.omega0);
        out.diagnostics.candidates.push_back(comet_candidate(p, f, converged));
        out.diagnostics.iterations = std::max(out.diagnostics.iterations, it + 1);
        finals.push_back(p);
    }
    if (finals.empty())
        throw Error(ErrorCode::invalid_argument, "gaussian_ml_estimate: no start has a finite likelihood");

    const std::size_t best = pick_candidate(out.diagnostics.candidates);
    const Candidate& pick = out.diagnostics.candidates[best];
    auto diagnostics = std::move(out.diagnostics);
    out = to_estimate(finals[best]);
    out.cost = pick.cost;
    out.diagnostics = std::move(diagnostics);
    out.diagnostics.converged = pick.converged;
    out.diagnostics.physically_valid = pick.physically_valid;
    if (!out.diagnostics.converged)
        out.diagnostics.notes.emplace_back("coordinate search hit the iteration cap");
    return out;
}

} // namespace momet
