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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "momet/concentrator.hpp"
#include "oracle.hpp"

using namespace momet;

namespace {

double rel(const RVector& a, const RVector& b) { return (a - b).norm() / b.norm(); }
double rel(const RMatrix& a, const RMatrix& b) { return (a - b).norm() / b.norm(); }

} // namespace

TEST_CASE("fast paths are selected by geometry and weight", "[concentrator]")
{
    std::mt19937_64 rng(1);
    const auto ula = ArrayGeometry::ula(6);
    const auto other = ArrayGeometry({0.0, 1.0, 2.7, 3.5, 5.0, 6.1});
    const HermitianMatrix rn(oracle::random_pd(6, rng));
    const Weighting w(HermitianMatrix(oracle::random_pd(6, rng)));
    const auto id = Weighting::identity(6);

    const auto m1 = build_model(ula, 4);
    const FastConcentrator a(m1, rn, id);
    CHECK(a.rhs_path() == FastConcentrator::RhsPath::ula_diagonal);
    CHECK(a.gram_path() == FastConcentrator::GramPath::constant);
    const FastConcentrator b(m1, rn, w);
    CHECK(b.gram_path() == FastConcentrator::GramPath::ula_tensor);

    const auto m2 = build_model(other, 4);
    const FastConcentrator c(m2, rn, id);
    CHECK(c.rhs_path() == FastConcentrator::RhsPath::hadamard);
    CHECK(c.gram_path() == FastConcentrator::GramPath::constant);
    const FastConcentrator d(m2, rn, w);
    CHECK(d.gram_path() == FastConcentrator::GramPath::trace);
    CHECK_FALSE(d.notes().empty());
}

TEST_CASE("right-hand side paths agree with the naive evaluation", "[concentrator]")
{
    std::mt19937_64 rng(2);
    const auto g = ArrayGeometry::ula(7);
    const auto m = build_model(g, 6);
    const HermitianMatrix rn(oracle::random_hermitian(7, rng));
    const FastConcentrator fc(m, rn, Weighting::identity(7));
    const CMatrix eye = CMatrix::Identity(7, 7);
    for (int i = 0; i < 50; ++i) {
        const double omega = oracle::uniform(rng, -pi, pi);
        const RVector ref = oracle::naive_system(g.positions(), 6, omega, rn.matrix(), eye).y;
        CHECK(rel(fc.rhs(omega), ref) <= 1e-10);
        CHECK(rel(fc.rhs_hadamard(omega), ref) <= 1e-10);
        CHECK(rel(fc.rhs_ula_diagonal(omega), ref) <= 1e-10);
        CHECK(rel(gram_system_kronecker(m, omega, rn, Weighting::identity(7)).rhs, ref) <= 1e-10);
    }
}

TEST_CASE("identity weight gives a constant Gram matrix", "[concentrator]")
{
    std::mt19937_64 rng(3);
    for (const auto& g : {ArrayGeometry::ula(5), ArrayGeometry({0.0, 0.6, 2.0, 2.9, 4.4})}) {
        const auto m = build_model(g, 5);
        const FastConcentrator fc(m, HermitianMatrix(oracle::random_pd(5, rng)), Weighting::identity(5));
        const auto mats = oracle::moment_matrices(g.positions(), 5);
        RMatrix ref(6, 6);
        for (Index k = 0; k < 6; ++k)
            for (Index l = 0; l < 6; ++l)
                ref(k, l) = (mats[static_cast<std::size_t>(k)] * mats[static_cast<std::size_t>(l)]).trace().real();
        for (double omega : {-2.0, 0.0, 0.4, 3.0})
            CHECK(rel(fc.gram(omega), ref) <= 1e-12);
    }
}

TEST_CASE("weighted Gram paths agree with the naive evaluation", "[concentrator]")
{
    std::mt19937_64 rng(4);
    for (const auto& g : {ArrayGeometry::ula(7), ArrayGeometry::ula(5, 0.5), ArrayGeometry({0.0, 1.0, 2.5, 4.0, 4.5})}) {
        const Index m = g.size();
        const auto model = build_model(g, 4);
        const HermitianMatrix rn(oracle::random_hermitian(m, rng));
        const CMatrix wm = oracle::random_pd(m, rng);
        const Weighting w{HermitianMatrix(wm)};
        const FastConcentrator fc(model, rn, w);
        for (int i = 0; i < 20; ++i) {
            const double omega = oracle::uniform(rng, -pi, pi);
            const auto ref = oracle::naive_system(g.positions(), 4, omega, rn.matrix(), wm);
            CHECK(rel(fc.gram(omega), ref.gram) <= 1e-9);
            CHECK(rel(fc.gram_trace(omega), ref.gram) <= 1e-9);
            if (g.is_ula())
                CHECK(rel(fc.gram_ula_tensor(omega), ref.gram) <= 1e-9);
            CHECK(rel(fc.rhs(omega), ref.y) <= 1e-9);
            const auto kron = gram_system_kronecker(model, omega, rn, w);
            CHECK(rel(kron.gram, ref.gram) <= 1e-9);
        }
    }
}

TEST_CASE("fast criterion and solve match the direct solve", "[concentrator]")
{
    std::mt19937_64 rng(5);
    const auto g = ArrayGeometry::ula(7);
    const auto model = build_model(g, 5);
    const HermitianMatrix rn(oracle::random_pd(7, rng));
    for (const auto& w : {Weighting::identity(7), Weighting(HermitianMatrix(oracle::random_pd(7, rng)))}) {
        const FastConcentrator fc(model, rn, w);
        CHECK(std::abs(fc.weighted_norm_sq() - weighted_inner(w, rn.matrix(), rn.matrix())) <= 1e-12 * fc.weighted_norm_sq());
        for (int i = 0; i < 10; ++i) {
            const double omega = oracle::uniform(rng, -pi, pi);
            const auto direct = solve_linear(model, omega, rn, w);
            const auto fast = fc.solve(omega);
            CHECK(rel(fast.alpha, direct.alpha) <= 1e-9);
            CHECK(std::abs(fc.criterion(omega) - concentrated_criterion(model, omega, rn, w))
                  <= 1e-9 * std::abs(concentrated_criterion(model, omega, rn, w)));
        }
    }
}
