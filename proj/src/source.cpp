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

#include "momet/source.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "momet/quadrature.hpp"

namespace momet {

namespace {

constexpr double sqrt3 = 1.7320508075688772;
constexpr int max_moment_order = 30;

// Integral of the piecewise-linear table against g over every segment, using
// an n-point Gauss-Legendre rule per segment.
template <class T, class G>
T integrate_table(const SourceDensity::Table& t, const QuadratureRule& rule, G&& g)
{
    T acc{};
    for (std::size_t i = 0; i + 1 < t.angles.size(); ++i) {
        const double a = t.angles[i];
        const double b = t.angles[i + 1];
        const double fa = t.values[i];
        const double fb = t.values[i + 1];
        if (fa == 0.0 && fb == 0.0)
            continue;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        T seg{};
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double s = rule.nodes[q];
            const double w = 0.5 * (1.0 - s) * fa + 0.5 * (1.0 + s) * fb;
            seg += rule.weights[q] * w * g(mid + half * s);
        }
        acc += half * seg;
    }
    return acc;
}

const QuadratureRule& rule16()
{
    static const QuadratureRule r = gauss_legendre(16);
    return r;
}

const QuadratureRule& rule32()
{
    static const QuadratureRule r = gauss_legendre(32);
    return r;
}

double double_factorial(int n)
{
    double r = 1.0;
    for (int k = n; k > 1; k -= 2)
        r *= k;
    return r;
}

} // namespace

std::string_view to_string(DensityShape shape)
{
    switch (shape) {
    case DensityShape::dirac: return "dirac";
    case DensityShape::gaussian: return "gaussian";
    case DensityShape::uniform: return "uniform";
    case DensityShape::exponential: return "exponential";
    case DensityShape::tabulated: return "tabulated";
    }
    return "unknown";
}

DensityShape parse_density_shape(std::string_view name)
{
    for (auto s : {DensityShape::dirac, DensityShape::gaussian, DensityShape::uniform,
                   DensityShape::exponential, DensityShape::tabulated})
        if (to_string(s) == name)
            return s;
    throw Error(ErrorCode::invalid_argument, "unknown density shape '" + std::string(name) + "'");
}

SourceDensity SourceDensity::dirac() { return SourceDensity(DensityShape::dirac); }
SourceDensity SourceDensity::gaussian() { return SourceDensity(DensityShape::gaussian); }
SourceDensity SourceDensity::uniform() { return SourceDensity(DensityShape::uniform); }
SourceDensity SourceDensity::exponential() { return SourceDensity(DensityShape::exponential); }

SourceDensity SourceDensity::tabulated(std::vector<double> angles, std::vector<double> power_density)
{
    if (angles.size() != power_density.size())
        throw Error(ErrorCode::invalid_argument, "tabulated density: grid and values differ in length");
    if (angles.size() < 2)
        throw Error(ErrorCode::invalid_argument, "tabulated density: at least two grid points required");
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (!std::isfinite(angles[i]) || !std::isfinite(power_density[i]))
            throw Error(ErrorCode::invalid_argument, "tabulated density: non-finite entry");
        if (power_density[i] < 0.0)
            throw Error(ErrorCode::invalid_argument,
                        "tabulated density: negative weight at index " + std::to_string(i));
        if (i > 0 && !(angles[i] > angles[i - 1]))
            throw Error(ErrorCode::invalid_argument,
                        "tabulated density: grid not strictly increasing at index " + std::to_string(i));
    }

    auto t = std::make_shared<Table>();
    t->angles = std::move(angles);
    t->values = std::move(power_density);
    const auto& rule = rule32();
    t->power = integrate_table<double>(*t, rule, [](double) { return 1.0; });
    if (!(t->power > 0.0))
        throw Error(ErrorCode::invalid_argument, "tabulated density: zero total power");
    t->mean = integrate_table<double>(*t, rule, [](double w) { return w; }) / t->power;
    const double mean = t->mean;
    const double var = integrate_table<double>(*t, rule, [mean](double w) { return (w - mean) * (w - mean); })
                       / t->power;
    if (!(var > 0.0))
        throw Error(ErrorCode::invalid_argument, "tabulated density: zero spread");
    t->spread = std::sqrt(var);

    SourceDensity d(DensityShape::tabulated);
    d.table_ = std::move(t);
    return d;
}

const SourceDensity::Table& SourceDensity::table() const
{
    if (!table_)
        throw Error(ErrorCode::invalid_argument, "SourceDensity::table: density is not tabulated");
    return *table_;
}

double SourceDensity::standardized_value(double x) const
{
    switch (shape_) {
    case DensityShape::dirac:
        throw Error(ErrorCode::invalid_argument, "dirac density has no pointwise value");
    case DensityShape::gaussian:
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi);
    case DensityShape::uniform:
        return std::abs(x) <= sqrt3 ? 1.0 / (2.0 * sqrt3) : 0.0;
    case DensityShape::exponential:
        return x >= -1.0 ? std::exp(-(x + 1.0)) : 0.0;
    case DensityShape::tabulated: {
        const auto& t = *table_;
        const double w = t.spread * x + t.mean;
        if (w < t.angles.front() || w > t.angles.back())
            return 0.0;
        std::size_t i = 1;
        while (i + 1 < t.angles.size() && t.angles[i] < w)
            ++i;
        const double s = (w - t.angles[i - 1]) / (t.angles[i] - t.angles[i - 1]);
        const double f = (1.0 - s) * t.values[i - 1] + s * t.values[i];
        return t.spread / t.power * f;
    }
    }
    return 0.0;
}

std::pair<double, double> SourceDensity::standardized_support() const
{
    switch (shape_) {
    case DensityShape::dirac: return {0.0, 0.0};
    case DensityShape::gaussian: return {-8.0, 8.0};
    case DensityShape::uniform: return {-sqrt3, sqrt3};
    case DensityShape::exponential: return {-1.0, 33.0};
    case DensityShape::tabulated: {
        const auto& t = *table_;
        return {(t.angles.front() - t.mean) / t.spread, (t.angles.back() - t.mean) / t.spread};
    }
    }
    return {0.0, 0.0};
}

cplx characteristic_value(const SourceDensity& density, double xi)
{
    switch (density.shape()) {
    case DensityShape::dirac:
        return 1.0;
    case DensityShape::gaussian:
        return std::exp(-0.5 * xi * xi);
    case DensityShape::uniform: {
        const double z = sqrt3 * xi;
        if (std::abs(z) < 1e-4)
            return 1.0 - z * z / 6.0 + z * z * z * z / 120.0;
        return std::sin(z) / z;
    }
    case DensityShape::exponential:
        return std::exp(-imag_unit * xi) / (1.0 - imag_unit * xi);
    case DensityShape::tabulated: {
        if (xi == 0.0)
            return 1.0;
        const auto& t = density.table();
        const double k = xi / t.spread;
        const double m = t.mean;
        auto kernel = [k, m](double w) { return std::polar(1.0, k * (w - m)); };
        const cplx coarse = integrate_table<cplx>(t, rule16(), kernel) / t.power;
        const cplx fine = integrate_table<cplx>(t, rule32(), kernel) / t.power;
        const double residual = std::abs(fine - coarse);
        if (residual > 1e-10)
            throw Error(ErrorCode::quadrature,
                        "characteristic_value: tabulated quadrature did not converge at xi="
                            + std::to_string(xi) + " (residual estimate "
                            + std::to_string(residual) + ")");
        return fine;
    }
    }
    return 1.0;
}

std::vector<double> central_moments(const SourceDensity& density, int order)
{
    if (order < 2)
        throw Error(ErrorCode::invalid_argument, "central_moments: order must be at least 2");
    if (order > max_moment_order)
        throw Error(ErrorCode::invalid_argument, "central_moments: order above 30 is not supported");
    std::vector<double> mu(static_cast<std::size_t>(order) + 1, 0.0);
    mu[0] = 1.0;
    mu[1] = 0.0;
    mu[2] = 1.0;
    for (int d = 3; d <= order; ++d) {
        double v = 0.0;
        switch (density.shape()) {
        case DensityShape::dirac:
            // Multiplied by spread^d = 0 everywhere it is used.
            v = 0.0;
            break;
        case DensityShape::gaussian:
            v = d % 2 == 0 ? double_factorial(d - 1) : 0.0;
            break;
        case DensityShape::uniform:
            v = d % 2 == 0 ? std::pow(3.0, d / 2) / (d + 1.0) : 0.0;
            break;
        case DensityShape::exponential:
            // Central moments of Exp(1) are the derangement numbers.
            v = (d - 1) * (mu[static_cast<std::size_t>(d - 1)] + mu[static_cast<std::size_t>(d - 2)]);
            break;
        case DensityShape::tabulated: {
            const auto& t = density.table();
            const double m = t.mean;
            const double s = t.spread;
            v = integrate_table<double>(t, rule32(), [d, m, s](double w) {
                    return std::pow((w - m) / s, d);
                })
                / t.power;
            break;
        }
        }
        mu[static_cast<std::size_t>(d)] = v;
    }
    return mu;
}

void SourceTruth::validate() const
{
    if (!std::isfinite(omega0))
        throw Error(ErrorCode::invalid_argument, "SourceTruth: omega0 must be finite");
    if (!(power > 0.0))
        throw Error(ErrorCode::invalid_argument, "SourceTruth: power must be positive");
    if (!(spread >= 0.0))
        throw Error(ErrorCode::invalid_argument, "SourceTruth: spread must be non-negative");
    if (!(noise >= 0.0))
        throw Error(ErrorCode::invalid_argument, "SourceTruth: noise power must be non-negative");
    if (density.shape() == DensityShape::dirac && spread != 0.0)
        throw Error(ErrorCode::invalid_argument, "SourceTruth: a dirac source has zero spread");
}

bool SourceTruth::narrow(const ArrayGeometry& geometry) const
{
    return spread < resolution_ambiguity(geometry).ambiguity / 6.0;
}

double SourceTruth::power_density(double omega) const
{
    if (spread == 0.0 || density.shape() == DensityShape::dirac)
        throw Error(ErrorCode::invalid_argument, "power_density: zero-spread source");
    return power / spread * density.standardized_value((omega - omega0) / spread);
}

SourceTruth truth_from_table(const SourceDensity& tabulated, double noise)
{
    const auto& t = tabulated.table();
    SourceTruth truth;
    truth.omega0 = t.mean;
    truth.spread = t.spread;
    truth.power = t.power;
    truth.noise = noise;
    truth.density = tabulated;
    return truth;
}

CMatrix shaping_matrix(const SourceDensity& density, double spread, const ArrayGeometry& geometry)
{
    const auto& u = geometry.positions();
    const Index m = geometry.size();
    CMatrix b(m, m);
    for (Index k = 0; k < m; ++k) {
        b(k, k) = 1.0;
        for (Index l = 0; l < k; ++l) {
            const double xi = (u[static_cast<std::size_t>(k)] - u[static_cast<std::size_t>(l)]) * spread;
            const cplx v = characteristic_value(density, xi);
            b(k, l) = v;
            b(l, k) = std::conj(v);
        }
    }
    return b;
}

HermitianMatrix true_covariance(const SourceTruth& truth, const ArrayGeometry& geometry)
{
    truth.validate();
    const CVector a = steering_vector(geometry, truth.omega0);
    CMatrix r = truth.power * (a * a.adjoint()).cwiseProduct(shaping_matrix(truth.density, truth.spread, geometry));
    r.diagonal().array() += truth.noise;
    HermitianMatrix out(std::move(r));
    const double lmin = out.min_eigenvalue();
    if (lmin < -1e-10 * out.trace())
        throw Error(ErrorCode::not_positive_definite,
                    "true_covariance: synthesized covariance is indefinite (min eigenvalue "
                        + std::to_string(lmin) + ")");
    return out;
}

SourceDensity load_tabulated_density(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::io, "load_tabulated_density: cannot open " + path.string());
    std::vector<double> x;
    std::vector<double> f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r,") == std::string::npos)
            continue;
        for (char& c : line)
            if (c == ',')
                c = ' ';
        std::istringstream ss(line);
        double a = 0.0;
        double v = 0.0;
        std::string rest;
        if (!(ss >> a >> v) || (ss >> rest))
            throw Error(ErrorCode::io, path.string() + ":" + std::to_string(lineno)
                                           + ": expected two columns (angle, power density)");
        x.push_back(a);
        f.push_back(v);
    }
    try {
        return SourceDensity::tabulated(std::move(x), std::move(f));
    } catch (const Error& e) {
        throw Error(ErrorCode::io, path.string() + ": " + e.what());
    }
}

} // namespace momet
