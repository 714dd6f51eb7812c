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

#include "momet/concentrator.hpp"

namespace momet {

FastConcentrator::FastConcentrator(const MomentModel& model, const HermitianMatrix& sample_cov, const Weighting& w)
    : model_(&model), sample_cov_(sample_cov), w_(w)
{
    const Index m = model.sensors();
    const Index n = model.linear_size();
    if (sample_cov.size() != m || w.size() != m)
        throw Error(ErrorCode::invalid_argument, "FastConcentrator: dimension mismatch");
    const auto& geometry = model.geometry();
    du_ = geometry.spacing();

    const CMatrix wr = w.is_identity() ? sample_cov.matrix() : CMatrix(w.matrix() * sample_cov.matrix() * w.matrix());
    norm_sq_ = weighted_inner(w, sample_cov.matrix(), sample_cov.matrix());

    hadamard_.reserve(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k)
        hadamard_.push_back(wr.cwiseProduct(model.linear_matrix(k).transpose()));

    if (geometry.is_ula()) {
        rhs_path_ = RhsPath::ula_diagonal;
        CVector sums = CVector::Zero(m);
        for (Index l = 0; l < m; ++l)
            for (Index i = 0; i + l < m; ++i)
                sums(l) += wr(i, i + l);
        diagonal_rhs_.resize(n, m);
        for (Index k = 0; k < n; ++k)
            for (Index l = 0; l < m; ++l)
                diagonal_rhs_(k, l) = (l == 0 ? 1.0 : 2.0) * model.linear_matrix(k)(l, 0) * sums(l);
    } else {
        notes_.emplace_back("y: non-uniform array, Hadamard-product path");
    }

    if (w.is_identity()) {
        gram_path_ = GramPath::constant;
        constant_gram_.resize(n, n);
        for (Index k = 0; k < n; ++k)
            for (Index l = k; l < n; ++l) {
                const double v = (model.linear_matrix(k).transpose().cwiseProduct(model.linear_matrix(l))).sum().real();
                constant_gram_(k, l) = v;
                constant_gram_(l, k) = v;
            }
        constant_inverse_.resize(n, n);
        for (Index k = 0; k < n; ++k) {
            GramSystem unit{constant_gram_, RVector::Unit(n, k), 0.0};
            const auto sol = solve_gram(unit);
            constant_inverse_.col(k) = sol.alpha;
            constant_condition_ = sol.condition;
            constant_ill_ = sol.ill_conditioned;
        }
    } else if (geometry.is_ula()) {
        gram_path_ = GramPath::ula_tensor;
        const CMatrix& wm = w.matrix();
        const Index span = 4 * m - 3;
        const Index offset = 2 * m - 2;
        tensor_.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
        for (Index k = 0; k < n; ++k) {
            const CMatrix& ak = model.linear_matrix(k);
            for (Index l = k; l < n; ++l) {
                const CMatrix& al = model.linear_matrix(l);
                CVector c = CVector::Zero(span);
                for (Index mi = 0; mi < m; ++mi)
                    for (Index ni = 0; ni < m; ++ni) {
                        const cplx left = wm(mi, ni);
                        for (Index p = 0; p < m; ++p) {
                            const cplx mid = left * al(ni, p);
                            for (Index q = 0; q < m; ++q)
                                c((ni - mi) + (q - p) + offset) += ak(q, mi) * mid * wm(p, q);
                        }
                    }
                tensor_.push_back(std::move(c));
            }
        }
    } else {
        notes_.emplace_back("Y: weighted non-uniform array, per-angle trace path");
    }
}

RVector FastConcentrator::rhs_hadamard(double omega) const
{
    const CVector a = steering_vector(model_->geometry(), omega);
    RVector y(model_->linear_size());
    for (Index k = 0; k < y.size(); ++k)
        y(k) = a.dot(hadamard_[static_cast<std::size_t>(k)] * a).real();
    return y;
}

RVector FastConcentrator::rhs_ula_diagonal(double omega) const
{
    if (rhs_path_ != RhsPath::ula_diagonal)
        throw Error(ErrorCode::invalid_argument, "FastConcentrator: diagonal path requires a ULA");
    return (diagonal_rhs_ * steering_vector(model_->geometry(), omega)).real();
}

RVector FastConcentrator::rhs(double omega) const
{
    return rhs_path_ == RhsPath::ula_diagonal ? rhs_ula_diagonal(omega) : rhs_hadamard(omega);
}

RMatrix FastConcentrator::gram_trace(double omega) const
{
    const CVector a = steering_vector(model_->geometry(), omega);
    const CMatrix v = a.conjugate().asDiagonal() * w_.matrix() * a.asDiagonal();
    const Index n = model_->linear_size();
    std::vector<CMatrix> av;
    av.reserve(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k)
        av.push_back(model_->linear_matrix(k) * v);
    RMatrix y(n, n);
    for (Index k = 0; k < n; ++k)
        for (Index l = k; l < n; ++l) {
            const double t = (av[static_cast<std::size_t>(k)].transpose().cwiseProduct(av[static_cast<std::size_t>(l)]))
                                 .sum()
                                 .real();
            y(k, l) = t;
            y(l, k) = t;
        }
    return y;
}

RMatrix FastConcentrator::gram_ula_tensor(double omega) const
{
    if (tensor_.empty())
        throw Error(ErrorCode::invalid_argument, "FastConcentrator: tensor path requires a weighted ULA");
    const Index m = model_->sensors();
    const Index n = model_->linear_size();
    const Index offset = 2 * m - 2;
    CVector phase(4 * m - 3);
    for (Index s = 0; s < phase.size(); ++s)
        phase(s) = std::polar(1.0, static_cast<double>(s - offset) * du_ * omega);
    RMatrix y(n, n);
    std::size_t idx = 0;
    for (Index k = 0; k < n; ++k)
        for (Index l = k; l < n; ++l) {
            const double t = tensor_[idx++].cwiseProduct(phase).sum().real();
            y(k, l) = t;
            y(l, k) = t;
        }
    return y;
}

RMatrix FastConcentrator::gram(double omega) const
{
    switch (gram_path_) {
    case GramPath::constant: return constant_gram_;
    case GramPath::ula_tensor: return gram_ula_tensor(omega);
    case GramPath::trace: return gram_trace(omega);
    }
    return gram_trace(omega);
}

LinearSolution FastConcentrator::solve(double omega) const
{
    if (gram_path_ == GramPath::constant) {
        LinearSolution out;
        const RVector y = rhs(omega);
        out.alpha = constant_inverse_ * y;
        out.condition = constant_condition_;
        out.ill_conditioned = constant_ill_;
        out.criterion = y.dot(out.alpha);
        return out;
    }
    return solve_gram(GramSystem{gram(omega), rhs(omega), 0.0});
}

double FastConcentrator::criterion(double omega) const
{
    return solve(omega).criterion;
}

} // namespace momet
