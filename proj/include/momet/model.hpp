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

#include <span>
#include <vector>

#include "momet/array.hpp"
#include "momet/types.hpp"

namespace momet {

/// Moment-based covariance model of order D.
///
/// The model covariance is R(theta) = a(w0) a(w0)^H o sum_k alpha_k A_k where
/// the linear parameters are alpha = (P, nu_2..nu_D, noise) and
///   A_P     = 1 1^T
///   A_nu_d  = (j^d / d!) U^{o d}
///   A_noise = I
/// Every A_k is Hermitian. The derivative matrix A_0 = jU of the mean
/// direction is kept alongside for the analysis code.
class MomentModel {
public:
    MomentModel(ArrayGeometry geometry, int order);

    const ArrayGeometry& geometry() const noexcept { return geometry_; }
    int order() const noexcept { return order_; }
    Index sensors() const noexcept { return geometry_.size(); }
    // D + 1
    Index linear_size() const noexcept { return order_ + 1; }

    const CMatrix& direction_matrix() const noexcept { return matrices_.front(); }
    // k = 0 is P, k = d - 1 is nu_d, k = D is the noise power
    const CMatrix& linear_matrix(Index k) const { return matrices_[static_cast<std::size_t>(k + 1)]; }
    // A_0 followed by the D + 1 linear matrices
    const std::vector<CMatrix>& matrices() const noexcept { return matrices_; }

    /// M^2 x (D+1) matrix whose columns are vec(A_k), column-major vec.
    const CMatrix& stacked() const noexcept { return stacked_; }

    /// sum_k alpha_k A_k
    CMatrix shaping(const RVector& alpha) const;

private:
    ArrayGeometry geometry_;
    int order_;
    std::vector<CMatrix> matrices_;
    CMatrix stacked_;
};

/// Checks 2 <= D <= max_order(geometry), then builds the model.
MomentModel build_model(const ArrayGeometry& geometry, int order);

/// theta = (w0, alpha) with alpha = (P, nu_2..nu_D, noise).
struct ParameterVector {
    double omega0 = 0.0;
    RVector linear;

    int order() const noexcept { return static_cast<int>(linear.size()) - 1; }
    double power() const { return linear(0); }
    double nu(int d) const { return linear(d - 1); }
    double noise() const { return linear(linear.size() - 1); }
    double spread_sq() const { return nu(2) / power(); }
    // P > 0 and nu_2 >= 0
    bool physically_valid() const { return power() > 0.0 && nu(2) >= 0.0; }

    /// (w0, P, nu_2..nu_D, noise) as one vector of length D + 2.
    RVector as_vector() const;
    static ParameterVector from_vector(const RVector& v);

    /// nu_d = P mu_d sigma^d with mu_2 = 1; `higher_moments` holds mu_3..mu_D.
    static ParameterVector from_characteristics(double omega0, double power, double spread,
                                                std::span<const double> higher_moments,
                                                double noise);

    struct Characteristics {
        double omega0 = 0.0;
        double power = 0.0;
        double spread = 0.0;
        std::vector<double> higher_moments; // mu_3..mu_D
        double noise = 0.0;
    };
    /// Inverse of from_characteristics. Requires a physically valid vector
    /// with non-zero spread when D > 2.
    Characteristics characteristics() const;
};

HermitianMatrix model_covariance(const MomentModel& model, const ParameterVector& theta);

/// dR/dtheta_k for k over (w0, P, nu_2..nu_D, noise).
std::vector<CMatrix> model_derivatives(const MomentModel& model, const ParameterVector& theta);

/// d^2 R / dtheta_k dtheta_l. Zero unless w0 is involved.
CMatrix model_second_derivative(const MomentModel& model, const ParameterVector& theta, Index k, Index l);

} // namespace momet
