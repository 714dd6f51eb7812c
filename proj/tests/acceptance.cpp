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

// Acceptance checks. One PASS or FAIL line per criterion; the exit status is
// nonzero when any criterion fails. Tolerances and budgets are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "momet/analysis.hpp"
#include "momet/bench.hpp"
#include "momet/concentrator.hpp"
#include "momet/estimator.hpp"
#include "momet/simulate.hpp"
#include "oracle.hpp"

using namespace momet;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects sub-checks of one criterion.
class Checks {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            out_.pass = false;
            failures_ << (failures_.tellp() > 0 ? "; " : "") << what;
        }
    }
    void note(const std::string& s) { notes_ << (notes_.tellp() > 0 ? "; " : "") << s; }
    Outcome result() const
    {
        Outcome o = out_;
        o.detail = notes_.str();
        if (!o.pass)
            o.detail += (o.detail.empty() ? "" : " | ") + std::string("failed: ") + failures_.str();
        return o;
    }

private:
    Outcome out_;
    std::ostringstream notes_;
    std::ostringstream failures_;
};

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

const double sigma_paper = 2.0 * pi * 0.05;

SourceTruth paper_truth(const SourceDensity& d, double spread = sigma_paper)
{
    return {1.0, spread, 100.0, 10.0, d};
}

int jobs()
{
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// 1. bias order and ordering of the curves
Outcome bias_order()
{
    Checks c;
    const auto g = ArrayGeometry::ula(7);
    const auto id = Weighting::identity(7);
    const auto truth = paper_truth(SourceDensity::gaussian());
    std::vector<double> spreads;
    for (int i = 0; i < 12; ++i)
        spreads.push_back(0.02 * std::pow(0.3 / 0.02, i / 11.0));
    std::vector<double> at_tenth;
    for (int d : {2, 3, 4}) {
        const auto model = build_model(g, d);
        const auto curve = bias_curve(model, truth, id, spreads);
        c.note("D=" + std::to_string(d) + " slope " + fmt("%.3f", curve.norm_slope));
        c.expect(curve.norm_slope >= d + 1 - 0.5, "slope D=" + std::to_string(d));
        SourceTruth t = truth;
        t.spread = 0.1;
        const auto acc = accumulation_point(model, true_covariance(t, g), id);
        at_tenth.push_back((acc.theta.as_vector() - true_parameters(t, d).as_vector()).norm());
        c.note("bias(0.1) " + fmt("%.6e", at_tenth.back()));
    }
    for (std::size_t i = 1; i < at_tenth.size(); ++i)
        c.expect(at_tenth[i] < at_tenth[i - 1],
                 "D=" + std::to_string(i + 2) + " not strictly below D=" + std::to_string(i + 1) + " at 0.1");
    return c.result();
}

// 2. direction unbiasedness for symmetric densities
Outcome symmetric_direction()
{
    Checks c;
    const auto g = ArrayGeometry::ula(7);
    const auto id = Weighting::identity(7);
    for (const auto& [name, density] :
         {std::pair{"gaussian", SourceDensity::gaussian()}, std::pair{"uniform", SourceDensity::uniform()}}) {
        const auto r = true_covariance(paper_truth(density), g);
        double worst = 0.0;
        for (int d = 2; d <= 10; ++d) {
            const double err = std::abs(accumulation_point(build_model(g, d), r, id).theta.omega0 - 1.0);
            worst = std::max(worst, err);
            c.expect(err <= 1e-6, std::string(name) + " D=" + std::to_string(d));
        }
        c.note(std::string(name) + " max |w0,0 - 1| over D=2..10 " + fmt("%.2e", worst));
    }
    return c.result();
}

// 3. full-order reconstruction and the half-period ambiguity
Outcome full_order()
{
    Checks c;
    const auto g = ArrayGeometry::ula(7);
    const auto id = Weighting::identity(7);
    const auto r = true_covariance(paper_truth(SourceDensity::uniform()), g);
    const double norm_sq = weighted_inner(id, r.matrix(), r.matrix());
    const auto e = estimate(build_model(g, 11), r, id);
    c.note("J/||R||^2 " + fmt("%.2e", e.cost / norm_sq));
    c.expect(e.cost <= 1e-12 * norm_sq, "cost");
    c.expect(e.theta.power() > 0.0 && std::abs(e.theta.omega0 - 1.0) <= 1e-6, "returned minimum");
    bool found = false;
    for (const auto& cand : e.diagnostics.candidates) {
        if (std::abs(std::remainder(cand.omega - (1.0 + pi), 2.0 * pi)) > 1e-3)
            continue;
        found = true;
        c.note("ambiguous minimum at w0+pi: P " + fmt("%.4g", cand.alpha(0)) + ", J/||R||^2 " +
               fmt("%.2e", cand.cost / norm_sq));
        c.expect(!cand.positive_power && cand.alpha(0) < 0.0, "ambiguous minimum has positive power");
        c.expect(cand.cost <= 1e-12 * norm_sq, "ambiguous minimum cost");
    }
    c.expect(found, "no candidate near w0+pi");
    return c.result();
}

// 4. point source from an exact covariance
Outcome dirac()
{
    Checks c;
    const auto g = ArrayGeometry::ula(7);
    const auto r = true_covariance(SourceTruth{1.0, 0.0, 100.0, 10.0, SourceDensity::dirac()}, g);
    const auto e = estimate(build_model(g, 2), r, Weighting::identity(7));
    const double ew = std::abs(e.theta.omega0 - 1.0), ep = std::abs(e.theta.power() - 100.0) / 100.0,
                 en = std::abs(e.theta.noise() - 10.0) / 10.0, es = std::abs(e.theta.nu(2)) / 100.0;
    c.note("rel errors w0 " + fmt("%.1e", ew) + ", P " + fmt("%.1e", ep) + ", noise " + fmt("%.1e", en) +
           ", |nu2|/P " + fmt("%.1e", es));
    c.expect(ew <= 1e-6 && ep <= 1e-6 && en <= 1e-6 && es <= 1e-6, "recovery");
    return c.result();
}

// 5. Monte Carlo variance against the sandwich covariance
Outcome sandwich()
{
    Checks c;
    const auto g = ArrayGeometry::ula(7);
    const auto id = Weighting::identity(7);
    const auto truth = paper_truth(SourceDensity::gaussian());
    const auto r = true_covariance(truth, g);
    const auto model = build_model(g, 2);
    const auto rep = asymptotic_covariance(model, truth, id);
    const int trials = 1000;
    const Index n = 10000;
    std::vector<RVector> est(trials);
    std::vector<std::jthread> pool;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < trials; k = next++) {
            const auto rn = sample_covariance(draw_snapshots(r, n, trial_seed(2024, static_cast<std::uint64_t>(k))));
            est[static_cast<std::size_t>(k)] = estimate(model, rn, id).theta.as_vector();
        }
    };
    for (int t = 1; t < jobs(); ++t)
        pool.emplace_back(worker);
    worker();
    pool.clear();
    RVector mean = RVector::Zero(4);
    for (const auto& x : est)
        mean += x;
    mean /= trials;
    RVector var = RVector::Zero(4);
    for (const auto& x : est)
        var += (x - mean).cwiseAbs2();
    var /= trials - 1;
    const char* names[] = {"w0", "P", "nu2", "noise"};
    for (Index k = 0; k < 4; ++k) {
        const double pred = rep.covariance(k, k) / static_cast<double>(n);
        const double rel = std::abs(var(k) - pred) / pred;
        c.note(std::string(names[k]) + " MC/pred " + fmt("%.3f", var(k) / pred));
        c.expect(rel <= 0.25, names[k]);
    }
    return c.result();
}

// 6. RMSE of the spread, low against high order
Outcome crossover()
{
    Checks c;
    const std::string text = R"([experiment]
id = crossover
[geometry]
sensors = 7
[source]
density = uniform
omega0 = 1
spread = 0.3141592653589793
power = 100
noise = 10
[estimators]
momet = 2, 10
[monte_carlo]
snapshots = 100, 100000
trials = 200
seed = 6
)";
    const auto cfg = bench::parse_config(text, "crossover");
    const auto rows = bench::summarize(bench::run_experiment(cfg, jobs()));
    auto rmse = [&](int order, Index n) {
        for (const auto& s : rows)
            if (s.order == order && s.snapshots == n)
                return s.rmse[2];
        return std::nan("");
    };
    for (Index n : {Index{100}, Index{100000}})
        c.note("N=" + std::to_string(n) + " rmse D=2 " + fmt("%.4f", rmse(2, n)) + ", D=10 " + fmt("%.4f", rmse(10, n)));
    c.expect(rmse(10, 100000) < rmse(2, 100000), "D=10 not below D=2 at N=1e5");
    c.expect(rmse(10, 100) > rmse(2, 100), "D=10 not above D=2 at N=1e2");
    return c.result();
}

// 7. fast concentration paths against direct evaluation
Outcome fast_paths()
{
    Checks c;
    std::mt19937_64 rng(7);
    double worst = 0.0;
    auto rel = [](const auto& a, const auto& b) { return (a - b).norm() / b.norm(); };
    for (const auto& g : {ArrayGeometry::ula(7), ArrayGeometry({0.0, 1.0, 2.5, 4.0, 4.5, 6.2})}) {
        const Index m = g.size();
        const int order = 4;
        const auto model = build_model(g, order);
        const HermitianMatrix rn(oracle::random_pd(m, rng));
        const CMatrix pd = oracle::random_pd(m, rng);
        for (const CMatrix& wm : {CMatrix(CMatrix::Identity(m, m)), pd}) {
            const bool identity = wm.isIdentity();
            const Weighting w = identity ? Weighting::identity(m) : Weighting(HermitianMatrix(wm));
            const FastConcentrator fc(model, rn, w);
            for (int i = 0; i < 50; ++i) {
                const double omega = oracle::uniform(rng, -pi, pi);
                const auto ref = oracle::naive_system(g.positions(), order, omega, rn.matrix(), wm);
                std::vector<double> errs{rel(fc.rhs(omega), ref.y), rel(fc.rhs_hadamard(omega), ref.y),
                                         rel(fc.gram(omega), ref.gram), rel(fc.gram_trace(omega), ref.gram)};
                if (g.is_ula() && identity)
                    errs.push_back(rel(fc.rhs_ula_diagonal(omega), ref.y));
                if (g.is_ula() && !identity)
                    errs.push_back(rel(fc.gram_ula_tensor(omega), ref.gram));
                const double crit = ref.y.dot(ref.gram.ldlt().solve(ref.y));
                errs.push_back(std::abs(fc.criterion(omega) - crit) / std::abs(crit));
                for (double e : errs)
                    worst = std::max(worst, e);
            }
        }
    }
    c.note("max relative difference " + fmt("%.2e", worst));
    c.expect(worst <= 1e-9, "agreement");
    return c.result();
}

// 8. analytic derivatives of the asymptotic cost
Outcome derivatives()
{
    Checks c;
    std::mt19937_64 rng(8);
    const auto g = ArrayGeometry::ula(5);
    const auto model = build_model(g, 3);
    const auto r = true_covariance(SourceTruth{1.0, 0.2, 10.0, 1.0, SourceDensity::exponential()}, g);
    const Weighting w(HermitianMatrix(oracle::random_pd(5, rng)));
    const RVector center = accumulation_point(model, r, w).theta.as_vector();
    std::normal_distribution<double> nd;
    double worst_g = 0.0, worst_h = 0.0;
    for (int i = 0; i < 10; ++i) {
        RVector x = center;
        for (Index k = 0; k < x.size(); ++k)
            x(k) += 0.05 * nd(rng) * std::max(std::abs(x(k)), 1e-2);
        auto f = [&](const RVector& v) { return asymptotic_cost(model, ParameterVector::from_vector(v), r, w); };
        auto grad = [&](const RVector& v) { return gradient_infty(model, ParameterVector::from_vector(v), r, w); };
        const auto th = ParameterVector::from_vector(x);
        worst_g = std::max(worst_g, oracle::relative_error(RMatrix(gradient_infty(model, th, r, w)),
                                                           RMatrix(oracle::fd_gradient(f, x))));
        worst_h = std::max(worst_h, oracle::relative_error(hessian_infty(model, th, r, w), oracle::fd_jacobian(grad, x)));
    }
    c.note("gradient " + fmt("%.2e", worst_g) + ", Hessian " + fmt("%.2e", worst_h));
    c.expect(worst_g <= 1e-5, "gradient");
    c.expect(worst_h <= 1e-5, "Hessian");
    return c.result();
}

// 9. E[x^H A x x^H B x] of circular Gaussian snapshots
Outcome fourth_moment()
{
    Checks c;
    std::mt19937_64 rng(9);
    const Index m = 3;
    const CMatrix r = oracle::random_pd(m, rng);
    const CMatrix a = oracle::random_hermitian(m, rng);
    const CMatrix b = oracle::random_hermitian(m, rng);
    const Index n = 1000000;
    const auto s = draw_snapshots(HermitianMatrix(r), n, 99);
    const RVector qa = (s.data.adjoint() * a).cwiseProduct(s.data.transpose()).rowwise().sum().real();
    const RVector qb = (s.data.adjoint() * b).cwiseProduct(s.data.transpose()).rowwise().sum().real();
    const RVector prod = qa.cwiseProduct(qb);
    const double mean = prod.mean();
    const double se = std::sqrt((prod.array() - mean).square().sum() / static_cast<double>(n - 1) / static_cast<double>(n));
    const double ref = ((r * a).trace() * (r * b).trace() + (r * a * r * b).trace()).real();
    c.note("deviation " + fmt("%.2f", std::abs(mean - ref) / se) + " standard errors");
    c.expect(std::abs(mean - ref) <= 3.0 * se, "identity");
    return c.result();
}

// 10. invariants
Outcome properties()
{
    Checks c;
    std::mt19937_64 rng(10);
    const auto g = ArrayGeometry::ula(7);
    const auto id = Weighting::identity(7);

    for (const auto& d : {SourceDensity::dirac(), SourceDensity::gaussian(), SourceDensity::uniform(),
                          SourceDensity::exponential()}) {
        const auto r = true_covariance(paper_truth(d, d.shape() == DensityShape::dirac ? 0.0 : sigma_paper), g);
        c.expect((r.matrix() - r.matrix().adjoint()).norm() == 0.0, "covariance not Hermitian");
        c.expect(r.min_eigenvalue() >= 10.0 * (1.0 - 1e-9), "covariance below the noise floor");
        const auto rn = sample_covariance(draw_snapshots(r, 20, 3));
        c.expect(rn.is_psd(), "sample covariance not PSD");
    }

    const auto truth = paper_truth(SourceDensity::gaussian());
    const auto r = true_covariance(truth, g);
    const auto rn = sample_covariance(draw_snapshots(r, 500, 11));
    for (int d : {2, 4}) {
        const auto model = build_model(g, d);
        const auto e = estimate(model, rn, id);
        const auto es = estimate(model, rn.scaled(37.5), id);
        c.expect(std::abs(es.theta.omega0 - e.theta.omega0) <= 1e-9, "scale changes the direction");
        c.expect((es.theta.linear - 37.5 * e.theta.linear).norm() <= 1e-8 * es.theta.linear.norm(),
                 "linear parameters do not scale");
        // no nearby parameter vector has a lower cost
        std::normal_distribution<double> nd;
        for (int i = 0; i < 200; ++i) {
            RVector x = e.theta.as_vector();
            for (Index k = 0; k < x.size(); ++k)
                x(k) += 1e-3 * nd(rng) * std::max(std::abs(x(k)), 1.0);
            const double j = cost(model, ParameterVector::from_vector(x), rn, id);
            if (j < e.cost) {
                c.expect(false, "perturbation lowers the cost at D=" + std::to_string(d));
                break;
            }
        }
    }

    const std::string text = R"([geometry]
sensors = 6
[source]
density = exponential
spread = 0.2
[estimators]
momet = 2, 3
gaussian_comet = true
gaussian_ml = true
[monte_carlo]
snapshots = 40, 400
trials = 4
seed = 31
)";
    const auto cfg = bench::parse_config(text, "determinism");
    auto strip = [](std::vector<bench::ResultRecord> v) {
        for (auto& x : v)
            x.wall_time = 0.0;
        std::ostringstream os;
        bench::write_raw_csv(os, v);
        return os.str();
    };
    const std::string a = strip(bench::run_experiment(cfg, 1));
    c.expect(a == strip(bench::run_experiment(cfg, 3)), "sweep depends on the thread count");
    c.expect(a == strip(bench::run_experiment(cfg, 1)), "sweep not reproducible");
    c.note("Hermitian/PSD, scale, perturbation and determinism checks run");
    return c.result();
}

struct Criterion {
    int id;
    const char* name;
    double budget; // seconds
    std::function<Outcome()> run;
};

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "bias order of the accumulation point", 120.0, bias_order},
        {2, "symmetric densities leave w0 unbiased", 30.0, symmetric_direction},
        {3, "full-order reconstruction and ambiguity", 30.0, full_order},
        {4, "point source recovery", 5.0, dirac},
        {5, "Monte Carlo variance matches the sandwich covariance", 600.0, sandwich},
        {6, "spread RMSE crossover between D=2 and D=10", 600.0, crossover},
        {7, "fast concentration paths", 10.0, fast_paths},
        {8, "gradient and Hessian of the asymptotic cost", 10.0, derivatives},
        {9, "fourth-moment identity", 30.0, fourth_moment},
        {10, "property suites", 120.0, properties},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > cr.budget) {
            o.pass = false;
            o.detail += " | over the time budget of " + fmt("%.0f", cr.budget) + " s";
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2d  %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
