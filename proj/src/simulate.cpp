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

#include "momet/simulate.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Eigenvalues>

namespace momet {

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial)
{
    return mix64(mix64(base) ^ (trial * 0xd1342543de82ef95ULL + 1));
}

double ComplexNormalStream::uniform_open()
{
    // 53 random bits mapped to (0, 1]
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

cplx ComplexNormalStream::operator()()
{
    // Box-Muller: radius for variance 1/2 per component
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-std::log(u1));
    const double angle = 2.0 * pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

CMatrix covariance_sqrt(const HermitianMatrix& r)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r.matrix());
    if (es.info() != Eigen::Success)
        throw Error(ErrorCode::not_positive_definite, "covariance_sqrt: eigendecomposition failed");
    RVector lambda = es.eigenvalues();
    const double tol = 1e-10 * std::abs(r.trace());
    if (lambda.minCoeff() < -tol)
        throw Error(ErrorCode::not_positive_definite,
                    "covariance_sqrt: covariance is indefinite (min eigenvalue "
                        + std::to_string(lambda.minCoeff()) + ")");
    lambda = lambda.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().adjoint();
}

SnapshotSet draw_snapshots(const HermitianMatrix& r, Index n, std::uint64_t seed)
{
    if (n < 1)
        throw Error(ErrorCode::invalid_argument, "draw_snapshots: at least one snapshot is required");
    const CMatrix root = covariance_sqrt(r);
    const Index m = r.size();
    ComplexNormalStream stream(seed);
    CMatrix z(m, n);
    for (Index t = 0; t < n; ++t)
        for (Index k = 0; k < m; ++k)
            z(k, t) = stream();
    SnapshotSet out;
    out.data = root * z;
    out.seed = seed;
    return out;
}

HermitianMatrix sample_covariance(const SnapshotSet& snapshots)
{
    const Index n = snapshots.snapshots();
    if (n < 1)
        throw Error(ErrorCode::invalid_argument, "sample_covariance: empty snapshot set");
    CMatrix r(snapshots.sensors(), snapshots.sensors());
    r.setZero();
    r.selfadjointView<Eigen::Lower>().rankUpdate(snapshots.data, 1.0 / static_cast<double>(n));
    r.triangularView<Eigen::StrictlyUpper>() = r.adjoint();
    return HermitianMatrix(std::move(r));
}

namespace {

std::filesystem::path header_path(const std::filesystem::path& path)
{
    return std::filesystem::path(path.string() + ".hdr");
}

void put_le(std::ostream& out, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int i = 0; i < 8; ++i)
        buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

double get_le(std::istream& in)
{
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in)
        throw Error(ErrorCode::io, "read_snapshots: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

} // namespace

void write_snapshots(const SnapshotSet& snapshots, const std::filesystem::path& path)
{
    std::ofstream bin(path, std::ios::binary);
    if (!bin)
        throw Error(ErrorCode::io, "write_snapshots: cannot open " + path.string());
    for (Index t = 0; t < snapshots.snapshots(); ++t)
        for (Index k = 0; k < snapshots.sensors(); ++k) {
            put_le(bin, snapshots.data(k, t).real());
            put_le(bin, snapshots.data(k, t).imag());
        }
    std::ofstream hdr(header_path(path));
    if (!hdr)
        throw Error(ErrorCode::io, "write_snapshots: cannot open header for " + path.string());
    hdr << snapshots.sensors() << ' ' << snapshots.snapshots() << ' ' << snapshots.seed << '\n';
}

SnapshotSet read_snapshots(const std::filesystem::path& path)
{
    std::ifstream hdr(header_path(path));
    if (!hdr)
        throw Error(ErrorCode::io, "read_snapshots: missing header " + header_path(path).string());
    Index m = 0;
    Index n = 0;
    std::uint64_t seed = 0;
    if (!(hdr >> m >> n >> seed) || m < 1 || n < 1)
        throw Error(ErrorCode::io, "read_snapshots: malformed header");
    std::ifstream bin(path, std::ios::binary);
    if (!bin)
        throw Error(ErrorCode::io, "read_snapshots: cannot open " + path.string());
    SnapshotSet out;
    out.seed = seed;
    out.data.resize(m, n);
    for (Index t = 0; t < n; ++t)
        for (Index k = 0; k < m; ++k) {
            const double re = get_le(bin);
            const double im = get_le(bin);
            out.data(k, t) = {re, im};
        }
    if (bin.peek() != std::char_traits<char>::eof())
        throw Error(ErrorCode::io, "read_snapshots: trailing bytes after payload");
    return out;
}

} // namespace momet
