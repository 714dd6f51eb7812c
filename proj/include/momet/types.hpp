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

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace momet {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx imag_unit{0.0, 1.0};

enum class ErrorCode {
    invalid_argument,
    identifiability,
    not_hermitian,
    not_positive_definite,
    ill_conditioned,
    quadrature,
    io,
    config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code)
    {
    }
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Complex M x M matrix that is conjugate-symmetric. Construction checks the
// symmetry to 1e-12 relative and stores the exactly symmetrized average.
class HermitianMatrix {
public:
    HermitianMatrix() = default;
    explicit HermitianMatrix(CMatrix m, double rel_tol = 1e-12);

    const CMatrix& matrix() const noexcept { return m_; }
    Index size() const noexcept { return m_.rows(); }
    cplx operator()(Index k, Index l) const { return m_(k, l); }

    double trace() const { return m_.diagonal().real().sum(); }
    double frobenius_norm() const { return m_.norm(); }
    RVector eigenvalues() const;
    double min_eigenvalue() const;
    // min eigenvalue >= -rel_tol * |trace|
    bool is_psd(double rel_tol = 1e-12) const;

    HermitianMatrix scaled(double c) const;

private:
    CMatrix m_;
};

} // namespace momet
