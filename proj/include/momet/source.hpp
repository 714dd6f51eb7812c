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

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "momet/array.hpp"
#include "momet/types.hpp"

namespace momet {

enum class DensityShape { dirac, gaussian, uniform, exponential, tabulated };

std::string_view to_string(DensityShape shape);
DensityShape parse_density_shape(std::string_view name);

/// Angular power-density shape.
///
/// The analytic shapes are stored in standardized form p(x): unit mass, zero
/// mean, unit variance.
///   gaussian     p(x) = exp(-x^2/2) / sqrt(2 pi)
///   uniform      p(x) = 1 / (2 sqrt 3) on |x| <= sqrt 3
///   exponential  p(x) = exp(-(x+1)) on x >= -1 (one-sided)
/// A tabulated density is a piecewise-linear power density f(omega) in W/rad
/// on a strictly increasing grid. Its power, mean and spread are extracted on
/// construction and p is the shifted and rescaled table.
/// The dirac shape is the zero-spread limit; its characteristic function is 1.
class SourceDensity {
public:
    static SourceDensity dirac();
    static SourceDensity gaussian();
    static SourceDensity uniform();
    static SourceDensity exponential();
    static SourceDensity tabulated(std::vector<double> angles, std::vector<double> power_density);

    DensityShape shape() const noexcept { return shape_; }

    // Standardized density value p(x). Not defined for dirac.
    double standardized_value(double x) const;
    // Interval outside which p vanishes (or is below 1e-14 for gaussian and
    // exponential tails).
    std::pair<double, double> standardized_support() const;

    struct Table {
        std::vector<double> angles;
        std::vector<double> values;
        double power = 0.0;
        double mean = 0.0;
        double spread = 0.0;
    };
    // Only for tabulated densities.
    const Table& table() const;

private:
    explicit SourceDensity(DensityShape s) : shape_(s) {}
    DensityShape shape_;
    std::shared_ptr<const Table> table_;
};

/// Characteristic function of the standardized density, E[exp(j xi x)].
cplx characteristic_value(const SourceDensity& density, double xi);

/// Central moments mu_0..mu_D of the standardized density.
/// mu_0 = 1, mu_1 = 0 and mu_2 = 1 are set rather than computed.
std::vector<double> central_moments(const SourceDensity& density, int order);

/// Ground truth of a single diffuse source plus white noise.
struct SourceTruth {
    double omega0 = 0.0; // mean direction [rad]
    double spread = 0.0; // standard deviation sigma_omega [rad]
    double power = 1.0;  // P [W]
    double noise = 0.0;  // sigma_eps^2 [W]
    SourceDensity density = SourceDensity::gaussian();

    void validate() const;
    // spread < ambiguity / 6
    bool narrow(const ArrayGeometry& geometry) const;
    // f(omega) in W/rad; zero-spread truths have no density.
    double power_density(double omega) const;
};

/// Truth taken from a tabulated density: power, mean and spread are the
/// extracted table characteristics.
SourceTruth truth_from_table(const SourceDensity& tabulated, double noise);

/// [R]_{k,l} = P exp(j (u_k - u_l) omega0) pt((u_k - u_l) sigma) + delta_{k,l} noise
HermitianMatrix true_covariance(const SourceTruth& truth, const ArrayGeometry& geometry);

/// Shaping matrix [B]_{k,l} = pt((u_k - u_l) sigma).
CMatrix shaping_matrix(const SourceDensity& density, double spread, const ArrayGeometry& geometry);

/// Two-column text file: angle [rad], power density [W/rad].
SourceDensity load_tabulated_density(const std::filesystem::path& path);

} // namespace momet
