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

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "momet/types.hpp"

namespace momet {

inline constexpr const char* snapshot_generator_id = "mt19937_64/splitmix64/box-muller";

/// N snapshots of an M-sensor array, stored column-wise (M x N).
struct SnapshotSet {
    CMatrix data;
    std::uint64_t seed = 0;
    std::string generator = snapshot_generator_id;

    Index sensors() const noexcept { return data.rows(); }
    Index snapshots() const noexcept { return data.cols(); }
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent stream for Monte Carlo trial `trial`. Depends only
/// on (base, trial), so trials can run in any order or in parallel.
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial);

/// Circular standard complex normal source: real and imaginary parts are
/// independent N(0, 1/2). Deterministic for a given seed.
class ComplexNormalStream {
public:
    explicit ComplexNormalStream(std::uint64_t seed) : engine_(mix64(seed)) {}
    cplx operator()();

private:
    double uniform_open();
    std::mt19937_64 engine_;
};

/// R^{1/2} from the eigendecomposition, eigenvalues below zero clipped. Fails
/// when the smallest eigenvalue is below -1e-10 * trace.
CMatrix covariance_sqrt(const HermitianMatrix& r);

SnapshotSet draw_snapshots(const HermitianMatrix& r, Index n, std::uint64_t seed);

/// (1/N) sum_t x(t) x(t)^H
HermitianMatrix sample_covariance(const SnapshotSet& snapshots);

/// Binary dump: little-endian float64 (re, im) pairs, row-major over
/// (t, sensor); the sidecar `<path>.hdr` holds "M N seed".
void write_snapshots(const SnapshotSet& snapshots, const std::filesystem::path& path);
SnapshotSet read_snapshots(const std::filesystem::path& path);

} // namespace momet
