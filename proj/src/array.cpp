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

#include "momet/array.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace momet {

DifferenceMatrix::DifferenceMatrix(std::span<const double> positions)
{
    const auto m = static_cast<Index>(positions.size());
    u_.resize(m, m);
    for (Index k = 0; k < m; ++k)
        for (Index l = 0; l < m; ++l)
            u_(k, l) = positions[k] - positions[l];
}

ArrayGeometry::ArrayGeometry(std::vector<double> positions) : u_(std::move(positions))
{
    if (u_.size() < 2)
        throw Error(ErrorCode::invalid_argument, "ArrayGeometry: at least two sensors are required");
    for (double p : u_)
        if (!std::isfinite(p))
            throw Error(ErrorCode::invalid_argument, "ArrayGeometry: non-finite sensor position");
    for (std::size_t k = 1; k < u_.size(); ++k)
        if (!(u_[k] > u_[k - 1]))
            throw Error(ErrorCode::invalid_argument,
                        "ArrayGeometry: positions must be strictly increasing (index "
                            + std::to_string(k) + ")");

    const double origin = u_.front();
    for (double& p : u_)
        p -= origin;

    const std::size_t gaps = u_.size() - 1;
    du_ = u_.back() / static_cast<double>(gaps);
    ula_ = true;
    for (std::size_t k = 1; k < u_.size(); ++k) {
        const double gap = u_[k] - u_[k - 1];
        if (std::abs(gap - du_) > 1e-12 * du_) {
            ula_ = false;
            break;
        }
    }
}

ArrayGeometry ArrayGeometry::ula(Index sensors, double spacing)
{
    if (sensors < 2)
        throw Error(ErrorCode::invalid_argument, "ArrayGeometry::ula: at least two sensors are required");
    if (!(spacing > 0.0))
        throw Error(ErrorCode::invalid_argument, "ArrayGeometry::ula: spacing must be positive");
    std::vector<double> u(static_cast<std::size_t>(sensors));
    for (Index k = 0; k < sensors; ++k)
        u[static_cast<std::size_t>(k)] = static_cast<double>(k) * spacing;
    return ArrayGeometry(std::move(u));
}

CVector steering_vector(const ArrayGeometry& geometry, double omega)
{
    const auto& u = geometry.positions();
    CVector a(geometry.size());
    for (Index k = 0; k < a.size(); ++k)
        a(k) = std::polar(1.0, u[static_cast<std::size_t>(k)] * omega);
    return a;
}

RMatrix hadamard_power(const DifferenceMatrix& u, int d)
{
    if (d < 0)
        throw Error(ErrorCode::invalid_argument, "hadamard_power: negative exponent");
    RMatrix out = RMatrix::Ones(u.size(), u.size());
    for (int i = 0; i < d; ++i)
        out = out.cwiseProduct(u.entries());
    return out;
}

int max_order(Index sensors, bool ula)
{
    if (sensors < 2)
        throw Error(ErrorCode::identifiability,
                    "max_order: at least two sensors are needed to identify a spread");
    const auto m = static_cast<int>(sensors);
    return ula ? 2 * m - 3 : m * (m - 1) - 1;
}

int max_order(const ArrayGeometry& geometry)
{
    return max_order(geometry.size(), geometry.is_ula());
}

ResolutionAmbiguity resolution_ambiguity(const ArrayGeometry& geometry)
{
    ResolutionAmbiguity out;
    if (geometry.is_ula()) {
        const double du = geometry.spacing();
        out.resolution = 2.0 * pi / (static_cast<double>(geometry.size()) * du);
        out.ambiguity = std::min(2.0 * pi, 2.0 * pi / du);
        return out;
    }
    out.resolution = 2.0 * pi / geometry.aperture();
    out.ambiguity = 2.0 * pi;
    out.nominal = true;
    return out;
}

ArrayGeometry load_geometry(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::io, "load_geometry: cannot open " + path.string());
    std::vector<double> u;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        double v = 0.0;
        if (!(ss >> v)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            throw Error(ErrorCode::io, path.string() + ":" + std::to_string(lineno)
                                           + ": expected a decimal position");
        }
        std::string rest;
        if (ss >> rest)
            throw Error(ErrorCode::io, path.string() + ":" + std::to_string(lineno)
                                           + ": one position per line expected");
        if (!u.empty() && !(v > u.back()))
            throw Error(ErrorCode::io, path.string() + ":" + std::to_string(lineno)
                                           + ": positions must be strictly increasing");
        u.push_back(v);
    }
    return ArrayGeometry(std::move(u));
}

} // namespace momet
