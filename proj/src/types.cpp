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

#include "momet/types.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace momet {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::identifiability: return "identifiability";
    case ErrorCode::not_hermitian: return "not hermitian";
    case ErrorCode::not_positive_definite: return "not positive definite";
    case ErrorCode::ill_conditioned: return "ill conditioned";
    case ErrorCode::quadrature: return "quadrature";
    case ErrorCode::io: return "io";
    case ErrorCode::config: return "config";
    }
    return "unknown";
}

HermitianMatrix::HermitianMatrix(CMatrix m, double rel_tol)
{
    if (m.rows() != m.cols())
        throw Error(ErrorCode::invalid_argument, "HermitianMatrix: matrix is not square");
    const double scale = m.norm();
    const double asym = (m - m.adjoint()).norm();
    if (asym > rel_tol * scale && asym > 0.0)
        throw Error(ErrorCode::not_hermitian,
                    "HermitianMatrix: conjugate-symmetry violated (relative error "
                        + std::to_string(asym / scale) + ")");
    m_ = 0.5 * (m + m.adjoint());
}

RVector HermitianMatrix::eigenvalues() const
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double HermitianMatrix::min_eigenvalue() const
{
    return eigenvalues().minCoeff();
}

bool HermitianMatrix::is_psd(double rel_tol) const
{
    return min_eigenvalue() >= -rel_tol * std::abs(trace());
}

HermitianMatrix HermitianMatrix::scaled(double c) const
{
    HermitianMatrix out;
    out.m_ = c * m_;
    return out;
}

} // namespace momet
