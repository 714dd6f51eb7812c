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

#include <string>
#include <vector>

#include "momet/cost.hpp"
#include "momet/model.hpp"

namespace momet {

/// Precomputed evaluator of y(w), Y(w) and the concentrated criterion for a
/// fixed (model, R_N, W).
///
/// y(w):  [y]_k = a(w)^H (W R_N W o A_k^T) a(w) with the Hadamard products
///        stored; for a ULA y(w) = Re{B a(w)} where B is built from the
///        diagonal sums of W R_N W.
/// Y(w):  constant [Y]_{k,l} = tr(A_k A_l) when W = I; for a ULA
///        [Y(w)]_{k,l} = sum_m c_{k,l,m} exp(j m du w), |m| <= 2M-2;
///        otherwise tr(A_k V A_l V) with V = Phi^H W Phi per call.
///
/// Holds R_N-dependent state, so each Monte Carlo trial needs its own.
class FastConcentrator {
public:
    enum class RhsPath { hadamard, ula_diagonal };
    enum class GramPath { constant, ula_tensor, trace };

    FastConcentrator(const MomentModel& model, const HermitianMatrix& sample_cov, const Weighting& w);

    RhsPath rhs_path() const noexcept { return rhs_path_; }
    GramPath gram_path() const noexcept { return gram_path_; }
    const std::vector<std::string>& notes() const noexcept { return notes_; }

    RVector rhs(double omega) const;
    RMatrix gram(double omega) const;
    // Individual routes, for cross-checks.
    RVector rhs_hadamard(double omega) const;
    RVector rhs_ula_diagonal(double omega) const;
    RMatrix gram_trace(double omega) const;
    RMatrix gram_ula_tensor(double omega) const;

    LinearSolution solve(double omega) const;
    double criterion(double omega) const;

    /// ||R_N||_W^2 = tr(W R_N W R_N)
    double weighted_norm_sq() const noexcept { return norm_sq_; }

    const MomentModel& model() const noexcept { return *model_; }
    const HermitianMatrix& sample_covariance() const noexcept { return sample_cov_; }
    const Weighting& weighting() const noexcept { return w_; }

private:
    const MomentModel* model_; // must outlive the concentrator
    HermitianMatrix sample_cov_;
    Weighting w_;
    RhsPath rhs_path_ = RhsPath::hadamard;
    GramPath gram_path_ = GramPath::trace;
    std::vector<std::string> notes_;
    double norm_sq_ = 0.0;
    double du_ = 1.0;

    std::vector<CMatrix> hadamard_;   // W R_N W o A_k^T
    CMatrix diagonal_rhs_;            // B, (D+1) x M
    RMatrix constant_gram_;           // tr(A_k A_l)
    std::vector<CVector> tensor_;     // c_{k,l,.} for k <= l, length 4M-3
    RMatrix constant_inverse_;
    double constant_condition_ = 1.0;
    bool constant_ill_ = false;
};

} // namespace momet
