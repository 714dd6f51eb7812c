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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "momet/analysis.hpp"
#include "momet/baselines.hpp"
#include "momet/simulate.hpp"
#include "momet/source.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace momet;
using testing_support::error_code;

namespace {

const double sigma_fig = 2.0 * pi * 0.05;

SourceTruth truth_of(const SourceDensity& d, double spread = sigma_fig)
{
    return {1.0, spread, 100.0, 10.0, d};
}

// (P, noise) minimizing ||W^{1/2} (R_N - P a a^H - noise I) W^{1/2}||.
RVector point_fit(const std::vector<double>& u, double omega, const CMatrix& rn, const CMatrix& w)
{
    const CVector a = oracle::steering(u, omega);
    const std::vector<CMatrix> phi{a * a.adjoint(), CMatrix::Identity(rn.rows(), rn.rows())};
    RMatrix y(2, 2);
    RVector b(2);
    for (Index k = 0; k < 2; ++k) {
        b(k) = (w * phi[static_cast<std::size_t>(k)] * w * rn).trace().real();
        for (Index l = 0; l < 2; ++l)
            y(k, l) = (w * phi[static_cast<std::size_t>(k)] * w * phi[static_cast<std::size_t>(l)]).trace().real();
    }
    return y.ldlt().solve(b);
}

} // namespace

TEST_CASE("Gaussian shape model", "[baselines]")
{
    const auto g = ArrayGeometry({0.0, 1.0, 2.5, 4.0});
    const GaussianShapeModel m(g);
    const CMatrix b = m.shaping(0.3);
    const auto& u = g.positions();
    for (Index k = 0; k < 4; ++k)
        for (Index l = 0; l < 4; ++l) {
            const double d = u[static_cast<std::size_t>(k)] - u[static_cast<std::size_t>(l)];
            CHECK(std::abs(b(k, l) - std::exp(-0.5 * d * d * 0.09)) < 1e-15);
        }
    const GaussianParameters th{0.7, 5.0, 0.3, 0.5};
    const auto r = m.covariance(th);
    const auto ref = true_covariance(SourceTruth{0.7, 0.3, 5.0, 0.5, SourceDensity::gaussian()}, g);
    CHECK(oracle::relative_error(r.matrix(), ref.matrix()) < 1e-14);
    for (double s : {0.0, 0.01, 0.5, 2.0})
        CHECK(m.covariance(GaussianParameters{0.2, 1.0, s, 0.0}).is_psd(1e-12));

    const auto e = to_estimate(th);
    CHECK(e.theta.order() == 2);
    CHECK(std::abs(e.theta.nu(2) - 5.0 * 0.09) < 1e-15);
    const auto back = gaussian_parameters(e);
    CHECK(back.omega0 == 0.7);
    CHECK(std::abs(back.spread - 0.3) < 1e-15);
    CHECK(back.noise == 0.5);
}

TEST_CASE("Gaussian-shape COMET", "[baselines]")
{
    const auto g = ArrayGeometry::ula(7);
    const auto id = Weighting::identity(7);

    SECTION("well-specified input is recovered")
    {
        const auto r = true_covariance(truth_of(SourceDensity::gaussian()), g);
        const auto p = gaussian_parameters(gaussian_comet_estimate(r, g, id));
        CHECK(std::abs(p.omega0 - 1.0) <= 1e-4);
        CHECK(std::abs(p.power - 100.0) <= 1e-4 * 100.0);
        CHECK(std::abs(p.spread - sigma_fig) <= 1e-4 * sigma_fig);
        CHECK(std::abs(p.noise - 10.0) <= 1e-4 * 10.0);
    }

    SECTION("point source drives the spread to the lower bound")
    {
        const auto r = true_covariance(SourceTruth{1.0, 0.0, 100.0, 10.0, SourceDensity::dirac()}, g);
        const auto p = gaussian_parameters(gaussian_comet_estimate(r, g, id));
        CHECK(p.spread <= resolution_ambiguity(g).resolution / 100.0);
        CHECK(std::abs(p.omega0 - 1.0) <= 1e-4);
        CHECK(std::abs(p.power - 100.0) <= 1e-4 * 100.0);
        CHECK(std::abs(p.noise - 10.0) <= 1e-4 * 10.0);
    }

    SECTION("zero fixed spread is the point-source fit")
    {
        std::mt19937_64 rng(3);
        const auto rn = sample_covariance(draw_snapshots(true_covariance(truth_of(SourceDensity::uniform()), g), 300, 4));
        const CMatrix wm = oracle::random_pd(7, rng);
        CometOptions opts;
        opts.fixed_spread = 0.0;
        const auto e = gaussian_comet_estimate(rn, g, Weighting(HermitianMatrix(wm)), opts);
        const auto p = gaussian_parameters(e);
        CHECK(p.spread == 0.0);
        const RVector ref = point_fit(g.positions(), p.omega0, rn.matrix(), wm);
        CHECK(std::abs(p.power - ref(0)) <= 1e-10 * std::abs(ref(0)));
        CHECK(std::abs(p.noise - ref(1)) <= 1e-10 * std::abs(ref(1)));
        // and the direction is a minimum of the point-source cost
        auto j = [&](double w) {
            const RVector a = point_fit(g.positions(), w, rn.matrix(), wm);
            const CVector s = oracle::steering(g.positions(), w);
            CMatrix d = rn.matrix() - a(0) * s * s.adjoint();
            d.diagonal().array() -= a(1);
            const CMatrix h = oracle::hermitian_sqrt(wm);
            return 0.5 * (h * d * h).squaredNorm();
        };
        for (double dw : {-1e-4, 1e-4, -0.3, 0.3})
            CHECK(j(p.omega0) <= j(p.omega0 + dw));
        CHECK(std::abs(j(p.omega0) - e.cost) <= 1e-10 * e.cost);
    }

    SECTION("misspecified shape leaves a spread bias above that of a high-order moment fit")
    {
        const auto truth = truth_of(SourceDensity::exponential());
        const auto r = true_covariance(truth, g);
        const auto p = gaussian_parameters(gaussian_comet_estimate(r, g, id));
        const auto ap = accumulation_point(build_model(g, 10), r, id);
        const double moment_bias = std::abs(std::sqrt(ap.theta.spread_sq()) - truth.spread);
        const double comet_bias = std::abs(p.spread - truth.spread);
        CHECK(comet_bias > 1e-3 * truth.spread);
        CHECK(comet_bias > moment_bias);
    }

    CometOptions bad;
    bad.fixed_spread = -1.0;
    CHECK(error_code([&] { gaussian_comet_estimate(true_covariance(truth_of(SourceDensity::gaussian()), g), g, id, bad); })
          == ErrorCode::invalid_argument);
}

TEST_CASE("Gaussian maximum likelihood", "[baselines]")
{
    const auto g = ArrayGeometry::ula(7);
    const GaussianShapeModel model(g);

    SECTION("well-specified input is recovered")
    {
        const auto r = true_covariance(truth_of(SourceDensity::gaussian()), g);
        const auto e = gaussian_ml_estimate(r, 1e4, g);
        const auto p = gaussian_parameters(e);
        CHECK(std::abs(p.omega0 - 1.0) <= 1e-4);
        CHECK(std::abs(p.power - 100.0) <= 1e-4 * 100.0);
        CHECK(std::abs(p.spread - sigma_fig) <= 1e-4 * sigma_fig);
        CHECK(std::abs(p.noise - 10.0) <= 1e-4 * 10.0);
        CHECK(e.diagnostics.converged);
        CHECK(std::abs(e.cost - gaussian_nll(model, p, r, 1e4)) <= 1e-12 * std::abs(e.cost));

        // no better point on a small grid around the truth
        const GaussianParameters t{1.0, 100.0, sigma_fig, 10.0};
        const double best = gaussian_nll(model, t, r, 1.0);
        for (int i = -1; i <= 1; ++i)
            for (int k = -1; k <= 1; ++k) {
                const GaussianParameters q{1.0 + 1e-3 * i, 100.0, sigma_fig * (1.0 + 1e-3 * k), 10.0};
                CHECK(gaussian_nll(model, q, r, 1.0) >= best);
            }
    }

    SECTION("likelihood is stationary at a perfect fit")
    {
        const GaussianParameters t{0.3, 4.0, 0.2, 1.5};
        const auto r = model.covariance(t);
        RVector x(4);
        x << t.omega0, t.power, t.spread, t.noise;
        auto f = [&](const RVector& v) { return gaussian_nll(model, {v(0), v(1), v(2), v(3)}, r, 1.0); };
        CHECK(oracle::fd_gradient(f, x).cwiseAbs().maxCoeff() <= 1e-6);
    }

    SECTION("misspecified shape keeps a spread bias in the large-sample limit")
    {
        const auto truth = truth_of(SourceDensity::uniform());
        const auto r = true_covariance(truth, g);
        for (double n : {1e4, 1e8}) {
            const auto p = gaussian_parameters(gaussian_ml_estimate(r, n, g));
            CHECK(std::abs(p.spread - truth.spread) > 0.01 * truth.spread);
        }
    }

    SECTION("non-positive-definite models have infinite negative log-likelihood")
    {
        const auto r = true_covariance(truth_of(SourceDensity::gaussian()), g);
        CHECK(std::isinf(gaussian_nll(model, {1.0, 100.0, 0.0, 0.0}, r, 10.0)));
        CHECK(std::isinf(gaussian_nll(model, {1.0, -1.0, 0.1, 1.0}, r, 10.0)));
    }
}

TEST_CASE("well-specified baselines fit at least as well as moment models", "[baselines]")
{
    const auto g = ArrayGeometry::ula(7);
    const auto r = true_covariance(truth_of(SourceDensity::gaussian()), g);
    const auto id = Weighting::identity(7);
    const GaussianShapeModel gm(g);
    const auto comet = gaussian_comet_estimate(r, g, id);
    const auto ml = gaussian_parameters(gaussian_ml_estimate(r, 1e4, g));
    const double ml_cost = 0.5 * (gm.covariance(ml).matrix() - r.matrix()).squaredNorm();
    // near D_max the moment fit is exact to round-off, so the comparison
    // allows for the optimizers' own precision
    const double slack = 1e-12 * weighted_inner(id, r.matrix(), r.matrix());
    for (int order : {2, 4, 10}) {
        const auto e = estimate(build_model(g, order), r, id);
        CHECK(comet.cost <= e.cost + slack);
        CHECK(ml_cost <= e.cost + slack);
    }
}

TEST_CASE("baselines on sample covariances", "[baselines]")
{
    const auto g = ArrayGeometry::ula(7);
    const auto rn = sample_covariance(draw_snapshots(true_covariance(truth_of(SourceDensity::gaussian()), g), 200, 8));
    const auto w = WeightSpec::inverse_sample_covariance().resolve(rn);
    const auto c = gaussian_parameters(gaussian_comet_estimate(rn, g, w));
    const auto e = gaussian_ml_estimate(rn, 200, g);
    const auto m = gaussian_parameters(e);
    CHECK(std::abs(c.omega0 - 1.0) < 0.1);
    CHECK(std::abs(m.omega0 - 1.0) < 0.1);
    CHECK(m.spread >= 0.0);
    // the likelihood fit is no worse than its starting points
    const GaussianShapeModel gm(g);
    CHECK(e.cost <= gaussian_nll(gm, c, rn, 200) + 1e-9 * std::abs(e.cost));
}
