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

#include "momet/cost.hpp"

#include <cmath>

#include <Eigen/LU>

namespace momet {

Weighting Weighting::identity(Index sensors)
{
    Weighting w;
    w.w_ = CMatrix::Identity(sensors, sensors);
    w.identity_ = true;
    return w;
}

Weighting::Weighting(const HermitianMatrix& w) : w_(w.matrix())
{
    const double lmin = w.min_eigenvalue();
    const double floor = 1e-12 * w.trace() / static_cast<double>(w.size());
    if (!(lmin > floor))
        throw Error(ErrorCode::not_positive_definite,
                    "Weighting: weight matrix is not positive definite (min eigenvalue "
                        + std::to_string(lmin) + ")");
    identity_ = w_.isIdentity(0.0);
}

WeightSpec WeightSpec::custom(HermitianMatrix w)
{
    WeightSpec s(Kind::custom);
    s.custom_ = std::move(w);
    return s;
}

Weighting WeightSpec::resolve(const HermitianMatrix& sample_cov) const
{
    switch (kind_) {
    case Kind::identity:
        return Weighting::identity(sample_cov.size());
    case Kind::custom:
        if (custom_->size() != sample_cov.size())
            throw Error(ErrorCode::invalid_argument, "WeightSpec: custom weight has the wrong size");
        return Weighting(*custom_);
    case Kind::inverse_sample_covariance: {
        const double lmin = sample_cov.min_eigenvalue();
        if (!(lmin > 1e-12 * sample_cov.trace() / static_cast<double>(sample_cov.size())))
            throw Error(ErrorCode::not_positive_definite,
                        "WeightSpec: sample covariance is singular, cannot invert (min eigenvalue "
                            + std::to_string(lmin) + ")");
        return Weighting(HermitianMatrix(sample_cov.matrix().inverse(), 1e-8));
    }
    }
    return Weighting::identity(sample_cov.size());
}

std::string_view to_string(WeightSpec::Kind kind)
{
    switch (kind) {
    case WeightSpec::Kind::identity: return "identity";
    case WeightSpec::Kind::inverse_sample_covariance: return "inverse_sample_covariance";
    case WeightSpec::Kind::custom: return "custom";
    }
    return "unknown";
}

WeightSpec::Kind parse_weight_kind(std::string_view name)
{
    if (name == "identity")
        return WeightSpec::Kind::identity;
    if (name == "inverse_sample_covariance")
        return WeightSpec::Kind::inverse_sample_covariance;
    if (name == "custom")
        return WeightSpec::Kind::custom;
    throw Error(ErrorCode::invalid_argument, "unknown weight '" + std::string(name) + "'");
}

double weighted_inner(const Weighting& w, const CMatrix& x, const CMatrix& y)
{
    if (w.is_identity())
        return (x.transpose().cwiseProduct(y)).sum().real();
    const CMatrix wx = w.matrix() * x;
    const CMatrix wy = w.matrix() * y;
    return (wx.transpose().cwiseProduct(wy)).sum().real();
}

double cost(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& sample_cov,
            const Weighting& w)
{
    const CMatrix diff = sample_cov.matrix() - model_covariance(model, theta).matrix();
    return 0.5 * weighted_inner(w, diff, diff);
}

namespace {

// diag of Psi(w) = conj(Phi) kron Phi for column-major vec
CVector psi_diagonal(const ArrayGeometry& g, double omega)
{
    const CVector a = steering_vector(g, omega);
    const Index m = a.size();
    CVector psi(m * m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i)
            psi(i + m * j) = a(i) * std::conj(a(j));
    return psi;
}

CMatrix kron_weight(const Weighting& w)
{
    const CMatrix& wm = w.matrix();
    const Index m = wm.rows();
    CMatrix k(m * m, m * m);
    // (W^T kron W)(i + m j, p + m q) = W^T(j, q) W(i, p)
    for (Index j = 0; j < m; ++j)
        for (Index q = 0; q < m; ++q)
            k.block(m * j, m * q, m, m) = wm(q, j) * wm;
    return k;
}

} // namespace

double cost_kronecker(const MomentModel& model, const ParameterVector& theta, const HermitianMatrix& sample_cov,
                      const Weighting& w)
{
    const CVector psi = psi_diagonal(model.geometry(), theta.omega0);
    const CVector r = sample_cov.matrix().reshaped();
    const CVector e = r - psi.asDiagonal() * (model.stacked() * theta.linear.cast<cplx>());
    return 0.5 * (e.adjoint() * kron_weight(w) * e)(0, 0).real();
}

GramSystem gram_system_kronecker(const MomentModel& model, double omega, const HermitianMatrix& sample_cov,
                                 const Weighting& w)
{
    const CVector psi = psi_diagonal(model.geometry(), omega);
    const CMatrix g = psi.asDiagonal() * model.stacked();
    const CMatrix kw = kron_weight(w);
    const CMatrix gk = g.adjoint() * kw;
    const CMatrix y = gk * g;
    const CVector rhs = gk * sample_cov.matrix().reshaped();
    GramSystem s;
    s.gram = y.real();
    s.rhs = rhs.real();
    const double ny = std::max(y.norm(), 1e-300);
    const double nr = std::max(rhs.norm(), 1e-300);
    s.imag_residue = std::max(y.imag().cwiseAbs().maxCoeff() / ny, rhs.imag().cwiseAbs().maxCoeff() / nr);
    return s;
}

LinearSolution solve_gram(const GramSystem& system)
{
    const RMatrix& y = system.gram;
    const Index n = y.rows();
    RVector scale(n);
    for (Index k = 0; k < n; ++k)
        scale(k) = y(k, k) > 0.0 ? 1.0 / std::sqrt(y(k, k)) : 1.0;
    const RMatrix ys = scale.asDiagonal() * y * scale.asDiagonal();
    const RVector rs = scale.cwiseProduct(system.rhs);

    LinearSolution out;
    Eigen::LDLT<RMatrix> ldlt(ys);
    const double rcond = ldlt.rcond();
    out.condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    RVector z;
    if (ldlt.info() == Eigen::Success && out.condition <= ill_condition_threshold) {
        z = ldlt.solve(rs);
    } else {
        out.ill_conditioned = true;
        Eigen::FullPivLU<RMatrix> lu(ys);
        lu.setThreshold(1e-12);
        z = lu.solve(rs);
    }
    out.alpha = scale.cwiseProduct(z);
    out.criterion = system.rhs.dot(out.alpha);
    return out;
}

LinearSolution solve_linear(const MomentModel& model, double omega, const HermitianMatrix& sample_cov,
                            const Weighting& w)
{
    const GramSystem s = gram_system_kronecker(model, omega, sample_cov, w);
    LinearSolution sol = solve_gram(s);
    if (s.imag_residue > 1e-8)
        throw Error(ErrorCode::not_hermitian,
                    "solve_linear: normal equations are not real (imaginary residue "
                        + std::to_string(s.imag_residue) + ")");
    return sol;
}

double concentrated_criterion(const MomentModel& model, double omega, const HermitianMatrix& sample_cov,
                              const Weighting& w)
{
    return solve_linear(model, omega, sample_cov, w).criterion;
}

} // namespace momet
