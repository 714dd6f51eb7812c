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
#include <string_view>

#include "momet/model.hpp"
#include "momet/types.hpp"

namespace momet {

/// Resolved Hermitian positive-definite weight matrix.
class Weighting {
public:
    static Weighting identity(Index sensors);
    /// Fails unless min eigenvalue > 1e-12 * trace / M.
    explicit Weighting(const HermitianMatrix& w);

    const CMatrix& matrix() const noexcept { return w_; }
    bool is_identity() const noexcept { return identity_; }
    Index size() const noexcept { return w_.rows(); }

private:
    Weighting() = default;
    CMatrix w_;
    bool identity_ = false;
};

/// How the weight is chosen: identity, inverse of the sample covariance
/// (computed once from R_N), or a user matrix.
class WeightSpec {
public:
    enum class Kind { identity, inverse_sample_covariance, custom };

    static WeightSpec identity() { return WeightSpec(Kind::identity); }
    static WeightSpec inverse_sample_covariance() { return WeightSpec(Kind::inverse_sample_covariance); }
    static WeightSpec custom(HermitianMatrix w);

    Kind kind() const noexcept { return kind_; }
    Weighting resolve(const HermitianMatrix& sample_cov) const;

private:
    explicit WeightSpec(Kind k) : kind_(k) {}
    Kind kind_;
    std::optional<HermitianMatrix> custom_;
};

std::string_view to_string(WeightSpec::Kind kind);
WeightSpec::Kind parse_weight_kind(std::string_view name);

/// tr(W X W Y) for Hermitian X, Y (real part).
double weighted_inner(const Weighting& w, const CMatrix& x, const CMatrix& y);

/// J = 1/2 ||W^{1/2} (R_N - R(theta)) W^{1/2}||_F^2
double cost(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& sample_cov,
            const Weighting& w);

/// Same quantity through the vectorized form
/// 1/2 (r - Psi L alpha)^H (W^T kron W) (r - Psi L alpha).
double cost_kronecker(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& sample_cov,
                      const Weighting& w);

/// Real normal equations Y(w) alpha = y(w) of the linear sub-problem.
struct GramSystem {
    RMatrix gram; // Y
    RVector rhs;  // y
    // max |imag| of Y and y relative to their norms
    double imag_residue = 0.0;
};

/// Y and y built literally from Psi, L and W^T kron W.
GramSystem gram_system_kronecker(const MomentModel& model, double omega, const HermitianMatrix& sample_cov,
                                 const Weighting& w);

struct LinearSolution {
    RVector alpha;
    double condition = 1.0; // of the diagonally scaled Y
    bool ill_conditioned = false;
    double criterion = 0.0; // y^T Y^{-1} y
};

inline constexpr double ill_condition_threshold = 1e12;

/// Solves Y alpha = y after symmetric diagonal scaling; switches to a
/// full-pivot LU with relative pivot threshold 1e-12 when cond > 1e12.
LinearSolution solve_gram(const GramSystem& system);

/// alpha(w) minimizing J for fixed w.
LinearSolution solve_linear(const MomentModel& model, double omega, const HermitianMatrix& sample_cov,
                            const Weighting& w);

/// y(w)^T Y(w)^{-1} y(w); J(w, alpha(w)) = 1/2 ||R_N||_W^2 - 1/2 criterion.
double concentrated_criterion(const MomentModel& model, double omega, const HermitianMatrix& sample_cov,
                              const Weighting& w);

} // namespace momet
