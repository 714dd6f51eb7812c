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

#include "momet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace momet {

namespace {

constexpr double imag_tolerance = 1e-10;

// W X W, skipping the products for the identity weight.
CMatrix sandwich(const Weighting& w, const CMatrix& x)
{
    return w.is_identity() ? x : CMatrix(w.matrix() * x * w.matrix());
}

double real_trace_product(const CMatrix& a, const CMatrix& b)
{
    return a.transpose().cwiseProduct(b).sum().real();
}

// tr(A B) with the imaginary residue checked against `scale`.
double checked_trace_product(const CMatrix& a, const CMatrix& b, double scale, const char* what)
{
    const cplx t = a.transpose().cwiseProduct(b).sum();
    if (std::abs(t.imag()) > imag_tolerance * std::max(scale, std::abs(t.real())))
        throw Error(ErrorCode::not_hermitian, std::string(what) + ": trace has a non-negligible imaginary part");
    return t.real();
}

double weighted_norm_sq(const HermitianMatrix& r, const Weighting& w)
{
    return weighted_inner(w, r.matrix(), r.matrix());
}

} // namespace

double asymptotic_cost(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& population,
                       const Weighting& w)
{
    return cost(model, theta, population, w);
}

RVector gradient_infty(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& population,
                       const Weighting& w)
{
    const auto d = model_derivatives(model, theta);
    const CMatrix residual = sandwich(w, model_covariance(model, theta).matrix() - population.matrix());
    RVector g(static_cast<Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k)
        g(static_cast<Index>(k)) = real_trace_product(d[k], residual);
    return g;
}

RMatrix hessian_infty(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& population,
                      const Weighting& w)
{
    const auto d = model_derivatives(model, theta);
    const Index n = static_cast<Index>(d.size());
    const CMatrix residual = sandwich(w, model_covariance(model, theta).matrix() - population.matrix());
    std::vector<CMatrix> wd;
    wd.reserve(d.size());
    for (const auto& dk : d)
        wd.push_back(sandwich(w, dk));

    RMatrix h(n, n);
    for (Index k = 0; k < n; ++k)
        for (Index l = k; l < n; ++l) {
            const CMatrix& a = wd[static_cast<std::size_t>(k)];
            const CMatrix& b = d[static_cast<std::size_t>(l)];
            const double scale = a.norm() * b.norm();
            double v = checked_trace_product(a, b, scale, "hessian_infty");
            if (k == 0) {
                const CMatrix d2 = model_second_derivative(model, theta, k, l);
                v += checked_trace_product(d2, residual, d2.norm() * residual.norm(), "hessian_infty");
            }
            h(k, l) = v;
            h(l, k) = v;
        }
    return h;
}

RMatrix gradient_covariance_C0(const MomentModel& model, const ParameterVector& theta,
                               const HermitianMatrix& population, const Weighting& w)
{
    const auto d = model_derivatives(model, theta);
    const Index n = static_cast<Index>(d.size());
    std::vector<CMatrix> p;
    p.reserve(d.size());
    for (const auto& dk : d)
        p.push_back(sandwich(w, dk) * population.matrix());
    RMatrix c(n, n);
    for (Index k = 0; k < n; ++k)
        for (Index l = k; l < n; ++l) {
            const CMatrix& a = p[static_cast<std::size_t>(k)];
            const CMatrix& b = p[static_cast<std::size_t>(l)];
            const double v = checked_trace_product(a, b, a.norm() * b.norm(), "gradient_covariance_C0");
            c(k, l) = v;
            c(l, k) = v;
        }
    return c;
}

ParameterVector true_parameters(const SourceTruth& truth, int order)
{
    truth.validate();
    std::vector<double> higher;
    if (order > 2) {
        const auto mu = central_moments(truth.density, order);
        higher.assign(mu.begin() + 3, mu.end());
    }
    return ParameterVector::from_characteristics(truth.omega0, truth.power, truth.spread, higher, truth.noise);
}

AccumulationPoint accumulation_point(const MomentModel& model, const HermitianMatrix& population, const Weighting& w,
                                     const AccumulationOptions& options)
{
    const Estimate start = estimate(model, population, w, options.search);

    AccumulationPoint out;
    out.start = start.theta;
    const double norm_sq = weighted_norm_sq(population, w);
    out.threshold = options.gradient_tolerance * norm_sq;
    // J is only resolved to about this much near its minimum; inside that
    // band the gradient norm decides.
    const double cost_noise = 1e-13 * norm_sq;

    RVector x = start.theta.as_vector();
    double fx = asymptotic_cost(model, start.theta, population, w);
    RVector g = gradient_infty(model, start.theta, population, w);
    for (int step = 0; step < options.max_steps && g.norm() > out.threshold; ++step) {
        const ParameterVector theta = ParameterVector::from_vector(x);
        const RMatrix h = hessian_infty(model, theta, population, w);
        // Jacobi scaling keeps the factorizations meaningful across the very
        // different parameter magnitudes.
        const RVector s = h.diagonal().cwiseAbs().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
        const RMatrix hs = s.asDiagonal() * h * s.asDiagonal();
        RVector dir;
        const Eigen::LLT<RMatrix> llt(hs);
        if (llt.info() == Eigen::Success) {
            dir = -(s.asDiagonal() * llt.solve(s.asDiagonal() * g));
        } else {
            const auto d = model_derivatives(model, theta);
            RMatrix gn(h.rows(), h.cols());
            for (Index k = 0; k < gn.rows(); ++k)
                for (Index l = k; l < gn.cols(); ++l)
                    gn(k, l) = gn(l, k) = weighted_inner(w, d[static_cast<std::size_t>(k)], d[static_cast<std::size_t>(l)]);
            const RMatrix gns = s.asDiagonal() * gn * s.asDiagonal();
            dir = -(s.asDiagonal() * gns.ldlt().solve(s.asDiagonal() * g));
        }

        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 40; ++half, t *= 0.5) {
            const RVector trial = x + t * dir;
            const ParameterVector tp = ParameterVector::from_vector(trial);
            const double ft = asymptotic_cost(model, tp, population, w);
            const RVector gt = gradient_infty(model, tp, population, w);
            if (ft < fx - cost_noise || (ft <= fx + cost_noise && gt.norm() < g.norm())) {
                x = trial;
                fx = ft;
                g = gt;
                moved = true;
                break;
            }
        }
        ++out.steps;
        if (!moved)
            break;
    }

    out.theta = ParameterVector::from_vector(x);
    out.gradient_norm = g.norm();
    out.converged = out.gradient_norm <= out.threshold;
    const int grid = options.search.grid_points > 0 ? options.search.grid_points
                                                    : static_cast<int>(8 * model.sensors());
    const double grid_step = resolution_ambiguity(model.geometry()).ambiguity / grid;
    out.basin_changed = std::abs(out.theta.omega0 - out.start.omega0) > 0.5 * grid_step;
    return out;
}

RVector AsymptoticReport::standard_deviations(double snapshots) const
{
    if (!(snapshots > 0.0))
        throw Error(ErrorCode::invalid_argument, "standard_deviations: the snapshot count must be positive");
    return (covariance.diagonal().cwiseMax(0.0) / snapshots).cwiseSqrt();
}

AsymptoticReport asymptotic_covariance(const MomentModel& model, const HermitianMatrix& population, const Weighting& w,
                                       const AccumulationOptions& options)
{
    const AccumulationPoint acc = accumulation_point(model, population, w, options);
    AsymptoticReport rep;
    rep.theta0 = acc.theta;
    rep.gradient_norm = acc.gradient_norm;
    rep.converged = acc.converged;
    rep.basin_changed = acc.basin_changed;
    rep.hessian = hessian_infty(model, acc.theta, population, w);
    rep.c0 = gradient_covariance_C0(model, acc.theta, population, w);

    const Eigen::SelfAdjointEigenSolver<RMatrix> eig(rep.hessian);
    rep.min_hessian_eigenvalue = eig.eigenvalues().minCoeff();
    const Index n = rep.hessian.rows();
    if (rep.min_hessian_eigenvalue <= 1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff()) {
        rep.singular = true;
        rep.covariance = RMatrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
        rep.spread_variance = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    const RMatrix hinv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                         eig.eigenvectors().transpose();
    const RMatrix c = hinv * rep.c0 * hinv;
    rep.covariance = 0.5 * (c + c.transpose());

    // sigma = sqrt(nu_2 / P); entries 1 and 2 of theta are P and nu_2.
    const double p = acc.theta.power();
    const double nu2 = acc.theta.nu(2);
    if (p > 0.0 && nu2 > 0.0) {
        const double sigma = std::sqrt(nu2 / p);
        RVector jac = RVector::Zero(n);
        jac(1) = -0.5 * sigma / p;
        jac(2) = 0.5 / (sigma * p);
        rep.spread_variance = jac.dot(rep.covariance * jac);
    } else {
        rep.spread_variance = std::numeric_limits<double>::quiet_NaN();
    }
    return rep;
}

AsymptoticReport asymptotic_covariance(const MomentModel& model, const SourceTruth& truth, const Weighting& w,
                                       const AccumulationOptions& options)
{
    AsymptoticReport rep = asymptotic_covariance(model, true_covariance(truth, model.geometry()), w, options);
    rep.truth = true_parameters(truth, model.order());
    rep.bias = rep.theta0.as_vector() - rep.truth->as_vector();
    return rep;
}

double loglog_slope(std::span<const double> x, std::span<const double> y, double floor)
{
    if (x.size() != y.size())
        throw Error(ErrorCode::invalid_argument, "loglog_slope: length mismatch");
    if (x.empty())
        return std::numeric_limits<double>::quiet_NaN();
    const double x_min = *std::min_element(x.begin(), x.end());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || x[i] > 10.0 * x_min * (1.0 + 1e-12) || !(std::abs(y[i]) > floor))
            continue;
        const double lx = std::log(x[i]);
        const double ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2)
        return std::numeric_limits<double>::quiet_NaN();
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0))
        return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / den;
}

BiasCurve bias_curve(const MomentModel& model, const SourceTruth& truth, const Weighting& w,
                     std::span<const double> spreads, const AccumulationOptions& options)
{
    for (std::size_t i = 0; i < spreads.size(); ++i) {
        if (!(spreads[i] >= 0.0))
            throw Error(ErrorCode::invalid_argument, "bias_curve: spreads must be non-negative");
        if (i > 0 && !(spreads[i] > spreads[i - 1]))
            throw Error(ErrorCode::invalid_argument, "bias_curve: spreads must be ascending");
    }
    BiasCurve curve;
    curve.order = model.order();
    for (double s : spreads) {
        SourceTruth t = truth;
        t.spread = s;
        if (s == 0.0)
            t.density = SourceDensity::dirac();
        const HermitianMatrix r = true_covariance(t, model.geometry());
        const AccumulationPoint acc = accumulation_point(model, r, w, options);
        const ParameterVector ref = true_parameters(t, model.order());
        BiasRow row;
        row.spread = s;
        row.bias = acc.theta.as_vector() - ref.as_vector();
        row.norm = row.bias.norm();
        row.spread_bias = std::sqrt(std::max(acc.theta.spread_sq(), 0.0)) - s;
        row.converged = acc.converged;
        curve.rows.push_back(std::move(row));
    }

    // Points closer to the numerical floor than 100 times the solver
    // tolerance are left out of the fits.
    curve.floor = 100.0 * 1e-10 * std::max(1.0, true_parameters(truth, model.order()).as_vector().norm());
    const Index n = model.linear_size() + 1;
    curve.slopes = RVector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& row : curve.rows)
        if (row.spread > 0.0)
            xs.push_back(row.spread);
    auto fit = [&](auto&& value) {
        ys.clear();
        for (const auto& row : curve.rows)
            if (row.spread > 0.0)
                ys.push_back(value(row));
        return loglog_slope(xs, ys, curve.floor);
    };
    for (Index k = 0; k < n; ++k)
        curve.slopes(k) = fit([k](const BiasRow& r) { return r.bias(k); });
    curve.norm_slope = fit([](const BiasRow& r) { return r.norm; });
    curve.spread_slope = fit([](const BiasRow& r) { return r.spread_bias; });
    return curve;
}

} // namespace momet
