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

#include "momet/model.hpp"

#include <cmath>

namespace momet {

namespace {

// j^d / d!
cplx taylor_coefficient(int d)
{
    double f = 1.0;
    for (int i = 2; i <= d; ++i)
        f *= i;
    static const cplx powers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return powers[d % 4] / f;
}

} // namespace

MomentModel::MomentModel(ArrayGeometry geometry, int order)
    : geometry_(std::move(geometry)), order_(order)
{
    const Index m = geometry_.size();
    const auto diff = geometry_.difference_matrix();
    matrices_.reserve(static_cast<std::size_t>(order_) + 2);
    matrices_.push_back(imag_unit * diff.entries().cast<cplx>());
    matrices_.push_back(CMatrix::Ones(m, m));
    for (int d = 2; d <= order_; ++d)
        matrices_.push_back(taylor_coefficient(d) * hadamard_power(diff, d).cast<cplx>());
    matrices_.push_back(CMatrix::Identity(m, m));

    stacked_.resize(m * m, linear_size());
    for (Index k = 0; k < linear_size(); ++k)
        stacked_.col(k) = linear_matrix(k).reshaped();
}

CMatrix MomentModel::shaping(const RVector& alpha) const
{
    if (alpha.size() != linear_size())
        throw Error(ErrorCode::invalid_argument, "MomentModel::shaping: parameter dimension mismatch");
    CMatrix b = CMatrix::Zero(sensors(), sensors());
    for (Index k = 0; k < linear_size(); ++k)
        b += alpha(k) * linear_matrix(k);
    return b;
}

MomentModel build_model(const ArrayGeometry& geometry, int order)
{
    const int dmax = max_order(geometry);
    if (order < 2 || order > dmax)
        throw Error(ErrorCode::identifiability,
                    "build_model: order " + std::to_string(order) + " outside [2, D_max=" + std::to_string(dmax)
                        + "]");
    return MomentModel(geometry, order);
}

RVector ParameterVector::as_vector() const
{
    RVector v(linear.size() + 1);
    v(0) = omega0;
    v.tail(linear.size()) = linear;
    return v;
}

ParameterVector ParameterVector::from_vector(const RVector& v)
{
    if (v.size() < 4)
        throw Error(ErrorCode::invalid_argument, "ParameterVector: need at least (w0, P, nu2, noise)");
    ParameterVector p;
    p.omega0 = v(0);
    p.linear = v.tail(v.size() - 1);
    return p;
}

ParameterVector ParameterVector::from_characteristics(double omega0, double power, double spread,
                                                      std::span<const double> higher_moments, double noise)
{
    const int order = 2 + static_cast<int>(higher_moments.size());
    ParameterVector p;
    p.omega0 = omega0;
    p.linear.resize(order + 1);
    p.linear(0) = power;
    p.linear(1) = power * spread * spread;
    double s = spread * spread;
    for (int d = 3; d <= order; ++d) {
        s *= spread;
        p.linear(d - 1) = power * higher_moments[static_cast<std::size_t>(d - 3)] * s;
    }
    p.linear(order) = noise;
    return p;
}

ParameterVector::Characteristics ParameterVector::characteristics() const
{
    if (!physically_valid())
        throw Error(ErrorCode::invalid_argument, "ParameterVector::characteristics: non-physical parameters");
    Characteristics c;
    c.omega0 = omega0;
    c.power = power();
    c.spread = std::sqrt(spread_sq());
    c.noise = noise();
    const int d_max = order();
    if (d_max > 2 && c.spread == 0.0)
        throw Error(ErrorCode::invalid_argument,
                    "ParameterVector::characteristics: moments undefined at zero spread");
    for (int d = 3; d <= d_max; ++d)
        c.higher_moments.push_back(nu(d) / (c.power * std::pow(c.spread, d)));
    return c;
}

HermitianMatrix model_covariance(const MomentModel& model, const ParameterVector& theta)
{
    if (theta.linear.size() != model.linear_size())
        throw Error(ErrorCode::invalid_argument, "model_covariance: parameter dimension mismatch");
    const CVector a = steering_vector(model.geometry(), theta.omega0);
    return HermitianMatrix((a * a.adjoint()).cwiseProduct(model.shaping(theta.linear)));
}

std::vector<CMatrix> model_derivatives(const MomentModel& model, const ParameterVector& theta)
{
    const CVector a = steering_vector(model.geometry(), theta.omega0);
    const CMatrix aa = a * a.adjoint();
    std::vector<CMatrix> out;
    out.reserve(static_cast<std::size_t>(model.linear_size()) + 1);
    const CMatrix r = aa.cwiseProduct(model.shaping(theta.linear));
    out.push_back(model.direction_matrix().cwiseProduct(r));
    for (Index k = 0; k < model.linear_size(); ++k)
        out.push_back(aa.cwiseProduct(model.linear_matrix(k)));
    return out;
}

CMatrix model_second_derivative(const MomentModel& model, const ParameterVector& theta, Index k, Index l)
{
    const Index m = model.sensors();
    if (k != 0 && l != 0)
        return CMatrix::Zero(m, m);
    const CVector a = steering_vector(model.geometry(), theta.omega0);
    const CMatrix aa = a * a.adjoint();
    const CMatrix& a0 = model.direction_matrix();
    if (k == 0 && l == 0)
        return a0.cwiseProduct(a0).cwiseProduct(aa.cwiseProduct(model.shaping(theta.linear)));
    const Index lin = (k == 0 ? l : k) - 1;
    return a0.cwiseProduct(aa.cwiseProduct(model.linear_matrix(lin)));
}

} // namespace momet
