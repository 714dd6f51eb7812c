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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "momet/analysis.hpp"
#include "momet/baselines.hpp"
#include "momet/cost.hpp"
#include "momet/source.hpp"

namespace momet::bench {

enum class EstimatorKind { momet, gaussian_ml, gaussian_comet };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::momet;
    int order = 0; // moment order, 0 for the Gaussian-shape baselines
};

/// Monte Carlo experiment description. See README for the file grammar.
struct ExperimentConfig {
    std::string id = "experiment";

    // Either a ULA (sensors, spacing) or explicit positions.
    Index sensors = 0;
    double spacing = 1.0;
    std::vector<double> positions;

    SourceDensity density = SourceDensity::gaussian();
    double omega0 = 1.0;
    double spread = 0.0;
    std::vector<double> spreads; // bias-curve sweep, ascending
    double power = 100.0;
    double noise = 10.0;

    std::vector<int> orders;
    bool gaussian_ml = false;
    bool gaussian_comet = false;
    WeightSpec::Kind weight = WeightSpec::Kind::identity;

    std::vector<Index> snapshots{100, 1000, 10000};
    int trials = 200;
    std::uint64_t seed = 1;

    std::filesystem::path output_dir;

    // Line of each "section.key" in the source file, for diagnostics.
    std::map<std::string, int> lines;
    std::string source_name = "<config>";

    ArrayGeometry geometry() const;
    SourceTruth truth() const;
    std::vector<EstimatorSpec> estimators() const;

    /// Cross-field checks: trials >= 1, orders within [2, D_max],
    /// N >= M with the inverse-covariance weight, a narrow truth.
    void validate() const;
};

/// Parses the sectioned key = value format. Errors carry ErrorCode::config
/// and a "source:line: " prefix. Relative file paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view text, const std::string& source_name = "<config>",
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// One estimate for one (trial, estimator, N).
struct ResultRecord {
    std::string experiment;
    std::string estimator;
    int order = 0;
    Index snapshots = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    double omega0 = 0.0;
    double power = 0.0;
    double spread_sq = 0.0;
    double noise = 0.0;
    double cost = 0.0;
    bool valid = false;
    std::string status = "ok"; // "ok" or the error code of a failed estimate
    double true_omega0 = 0.0;
    double true_power = 0.0;
    double true_spread = 0.0;
    double true_noise = 0.0;
    double resolution = 0.0;
    double wall_time = 0.0; // seconds; not reproducible
};

/// Runs every estimator of a configuration on the snapshots of one trial.
/// Immutable after construction, so one instance serves all worker threads.
class TrialRunner {
public:
    explicit TrialRunner(const ExperimentConfig& config);

    const ArrayGeometry& geometry() const noexcept { return geometry_; }
    const HermitianMatrix& population() const noexcept { return population_; }

    /// Snapshot seed of (N, trial).
    std::uint64_t seed(Index snapshots, int trial) const;

    std::vector<ResultRecord> run(Index snapshots, int trial) const;
    /// Estimates from a given sample covariance. Failures become records
    /// with valid = false and the error code in `status`.
    std::vector<ResultRecord> run(const HermitianMatrix& sample_cov, Index snapshots, int trial,
                                  std::uint64_t seed) const;

private:
    ExperimentConfig config_;
    ArrayGeometry geometry_;
    SourceTruth truth_;
    HermitianMatrix population_;
    std::vector<EstimatorSpec> estimators_;
    std::vector<MomentModel> models_; // one per moment estimator, in order
    double resolution_ = 0.0;
};

using ProgressFn = std::function<void(Index snapshots, int done, int total)>;

/// All (N, trial) pairs, `jobs` at a time. Records come back ordered by
/// (N, trial, estimator) whatever the completion order.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& config, int jobs, const ProgressFn& progress = {});

struct SummaryRow {
    std::string estimator;
    int order = 0;
    Index snapshots = 0;
    int trials = 0;
    int failures = 0; // rows whose status is not "ok"; left out of the statistics
    // (omega0, power, spread, noise), normalized
    std::array<double, 4> rmse{};
    std::array<double, 4> bias{};
    std::array<double, 4> variance{};
};

/// Normalized errors: w0 by the resolution, the others by their true value
/// (absolute when the truth is zero). The spread estimate is
/// sqrt(max(spread_sq, 0)). Rows sorted by (estimator, order, N).
std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records);

struct AsymptoticRow {
    int order = 0;
    Index snapshots = 0;
    double spread = 0.0;
    std::array<double, 4> bias{}; // normalized as in summarize
    std::array<double, 4> std{};
    double min_hessian_eigenvalue = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
    bool singular = false;
};

/// Asymptotic bias and standard deviation of every moment estimator of the
/// configuration at each N. The inverse-covariance weight becomes R^{-1}.
std::vector<AsymptoticRow> asymptotic_rows(const ExperimentConfig& config);

/// Bias curves over config.spreads, one per moment order.
std::vector<BiasCurve> bias_curves(const ExperimentConfig& config);

std::string format_double(double v);

void write_raw_csv(std::ostream& os, const std::vector<ResultRecord>& records);
/// Fails with ErrorCode::io on a header mismatch, a malformed row or no rows.
std::vector<ResultRecord> read_raw_csv(std::istream& is, const std::string& source_name = "<raw>");
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_asymptotic_csv(std::ostream& os, const std::vector<AsymptoticRow>& rows);
void write_bias_curve_csv(std::ostream& os, const std::vector<BiasCurve>& curves, const ExperimentConfig& config);
void write_bias_slopes_csv(std::ostream& os, const std::vector<BiasCurve>& curves);

} // namespace momet::bench
