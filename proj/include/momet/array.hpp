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

#include <filesystem>
#include <span>
#include <vector>

#include "momet/types.hpp"

namespace momet {

// Real M x M matrix with entries u_k - u_l. Antisymmetric, zero diagonal.
class DifferenceMatrix {
public:
    explicit DifferenceMatrix(std::span<const double> positions);

    const RMatrix& entries() const noexcept { return u_; }
    Index size() const noexcept { return u_.rows(); }

private:
    RMatrix u_;
};

/// Linear array with sensor positions in half-wavelength units.
///
/// Positions are translated on construction so that the first sensor sits at
/// the origin; the steering vector then has a unit first entry. The array is
/// flagged uniform when all consecutive spacings agree to 1e-12 relative.
class ArrayGeometry {
public:
    explicit ArrayGeometry(std::vector<double> positions);

    /// Uniform array u_k = (k-1) * spacing.
    static ArrayGeometry ula(Index sensors, double spacing = 1.0);

    Index size() const noexcept { return static_cast<Index>(u_.size()); }
    const std::vector<double>& positions() const noexcept { return u_; }
    bool is_ula() const noexcept { return ula_; }
    // Mean consecutive spacing; the exact spacing for a ULA.
    double spacing() const noexcept { return du_; }
    double aperture() const noexcept { return u_.back() - u_.front(); }

    DifferenceMatrix difference_matrix() const { return DifferenceMatrix(u_); }

private:
    std::vector<double> u_;
    double du_ = 1.0;
    bool ula_ = false;
};

CVector steering_vector(const ArrayGeometry& geometry, double omega);

// Entrywise d-th power, with 0^0 = 1.
RMatrix hadamard_power(const DifferenceMatrix& u, int d);

// Largest identifiable moment order: 2M-3 for a ULA, M(M-1)-1 otherwise.
int max_order(Index sensors, bool ula);
int max_order(const ArrayGeometry& geometry);

struct ResolutionAmbiguity {
    double resolution = 0.0; // delta omega
    double ambiguity = 0.0;  // width of the unambiguous domain
    bool nominal = false;    // aperture-based heuristic (non-uniform arrays)
};

ResolutionAmbiguity resolution_ambiguity(const ArrayGeometry& geometry);

/// Reads one position per line. Blank lines and '#' comments are ignored.
ArrayGeometry load_geometry(const std::filesystem::path& path);

} // namespace momet
