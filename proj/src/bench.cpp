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

#include "momet/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "momet/simulate.hpp"

namespace momet::bench {

std::string_view to_string(EstimatorKind kind)
{
    switch (kind) {
    case EstimatorKind::momet: return "momet";
    case EstimatorKind::gaussian_ml: return "gaussian_ml";
    case EstimatorKind::gaussian_comet: return "gaussian_comet";
    }
    return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name)
{
    for (auto k : {EstimatorKind::momet, EstimatorKind::gaussian_ml, EstimatorKind::gaussian_comet})
        if (name == to_string(k))
            return k;
    throw Error(ErrorCode::invalid_argument, "unknown estimator '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- config

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        out.push_back(item);
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

class ConfigParser {
public:
    ConfigParser(std::string source, std::filesystem::path base) : source_(std::move(source)), base_(std::move(base)) {}

    [[noreturn]] void fail(int line, const std::string& msg) const
    {
        throw Error(ErrorCode::config, source_ + ":" + std::to_string(line) + ": " + msg);
    }

    double number(int line, std::string_view v) const
    {
        double x = 0.0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
            fail(line, "expected a number, got '" + std::string(v) + "'");
        return x;
    }

    long long integer(int line, std::string_view v) const
    {
        long long x = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
            fail(line, "expected an integer, got '" + std::string(v) + "'");
        return x;
    }

    std::uint64_t unsigned_integer(int line, std::string_view v) const
    {
        std::uint64_t x = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
            fail(line, "expected a non-negative integer, got '" + std::string(v) + "'");
        return x;
    }

    bool boolean(int line, std::string_view v) const
    {
        if (v == "true" || v == "yes" || v == "on" || v == "1")
            return true;
        if (v == "false" || v == "no" || v == "off" || v == "0")
            return false;
        fail(line, "expected a boolean, got '" + std::string(v) + "'");
    }

    std::vector<double> numbers(int line, std::string_view v) const
    {
        std::vector<double> out;
        for (auto item : split_list(v))
            out.push_back(number(line, item));
        return out;
    }

    std::filesystem::path path(std::string_view v) const
    {
        std::filesystem::path p{std::string(v)};
        return p.is_relative() && !base_.empty() ? base_ / p : p;
    }

    const std::string& source() const noexcept { return source_; }

private:
    std::string source_;
    std::filesystem::path base_;
};

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"experiment", {"id"}},
        {"geometry", {"sensors", "spacing", "positions"}},
        {"source", {"density", "table", "omega0", "spread", "spreads", "spread_sweep", "power", "noise"}},
        {"estimators", {"momet", "gaussian_ml", "gaussian_comet", "weight"}},
        {"monte_carlo", {"snapshots", "trials", "seed"}},
        {"output", {"directory"}},
    };
    return keys;
}

bool valid_id(std::string_view id)
{
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

} // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source_name, const std::filesystem::path& base_dir)
{
    const ConfigParser p(source_name, base_dir);
    ExperimentConfig cfg;
    cfg.source_name = source_name;
    cfg.orders.clear();

    std::string section;
    std::optional<std::string> table_path;
    std::string density_name = "gaussian";
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        const auto line = trim(raw);
        if (line.empty() || line.front() == ';')
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                p.fail(line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_keys().count(section))
                p.fail(line_no, "unknown section [" + section + "]");
            cfg.lines.emplace(section, line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            p.fail(line_no, "expected 'key = value'");
        if (section.empty())
            p.fail(line_no, "key outside of any section");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (!known_keys().at(section).count(key))
            p.fail(line_no, "unknown key '" + key + "' in [" + section + "]");
        const std::string full = section + "." + key;
        if (!cfg.lines.emplace(full, line_no).second)
            p.fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
        if (value.empty())
            p.fail(line_no, "empty value for '" + key + "'");

        if (full == "experiment.id") {
            if (!valid_id(value))
                p.fail(line_no, "experiment id may only contain letters, digits, '_', '-' and '.'");
            cfg.id = std::string(value);
        } else if (full == "geometry.sensors") {
            const auto m = p.integer(line_no, value);
            if (m < 2)
                p.fail(line_no, "sensors must be at least 2");
            cfg.sensors = static_cast<Index>(m);
        } else if (full == "geometry.spacing") {
            cfg.spacing = p.number(line_no, value);
            if (!(cfg.spacing > 0.0))
                p.fail(line_no, "spacing must be positive");
        } else if (full == "geometry.positions") {
            try {
                cfg.positions = load_geometry(p.path(value)).positions();
            } catch (const Error& e) {
                p.fail(line_no, e.what());
            }
        } else if (full == "source.density") {
            density_name = std::string(value);
            try {
                (void)parse_density_shape(value);
            } catch (const Error& e) {
                p.fail(line_no, e.what());
            }
        } else if (full == "source.table") {
            table_path = p.path(value).string();
        } else if (full == "source.omega0") {
            cfg.omega0 = p.number(line_no, value);
        } else if (full == "source.spread") {
            cfg.spread = p.number(line_no, value);
            if (cfg.spread < 0.0)
                p.fail(line_no, "spread must be non-negative");
        } else if (full == "source.spreads") {
            cfg.spreads = p.numbers(line_no, value);
        } else if (full == "source.spread_sweep") {
            const auto v = split_list(value);
            if (v.size() != 3)
                p.fail(line_no, "spread_sweep expects 'first, last, count'");
            const double lo = p.number(line_no, v[0]);
            const double hi = p.number(line_no, v[1]);
            const auto n = p.integer(line_no, v[2]);
            if (!(lo > 0.0) || !(hi > lo) || n < 2)
                p.fail(line_no, "spread_sweep needs 0 < first < last and count >= 2");
            cfg.spreads.clear();
            for (long long i = 0; i < n; ++i)
                cfg.spreads.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1)));
        } else if (full == "source.power") {
            cfg.power = p.number(line_no, value);
        } else if (full == "source.noise") {
            cfg.noise = p.number(line_no, value);
        } else if (full == "estimators.momet") {
            for (auto item : split_list(value)) {
                const auto d = p.integer(line_no, item);
                if (d < 2)
                    p.fail(line_no, "moment orders start at 2");
                cfg.orders.push_back(static_cast<int>(d));
            }
        } else if (full == "estimators.gaussian_ml") {
            cfg.gaussian_ml = p.boolean(line_no, value);
        } else if (full == "estimators.gaussian_comet") {
            cfg.gaussian_comet = p.boolean(line_no, value);
        } else if (full == "estimators.weight") {
            try {
                cfg.weight = parse_weight_kind(value);
            } catch (const Error& e) {
                p.fail(line_no, e.what());
            }
            if (cfg.weight == WeightSpec::Kind::custom)
                p.fail(line_no, "custom weights are not available from a configuration file");
        } else if (full == "monte_carlo.snapshots") {
            cfg.snapshots.clear();
            for (auto item : split_list(value)) {
                const auto n = p.integer(line_no, item);
                if (n < 1)
                    p.fail(line_no, "snapshot counts must be positive");
                cfg.snapshots.push_back(static_cast<Index>(n));
            }
        } else if (full == "monte_carlo.trials") {
            const auto t = p.integer(line_no, value);
            if (t < 1)
                p.fail(line_no, "trials must be at least 1");
            cfg.trials = static_cast<int>(t);
        } else if (full == "monte_carlo.seed") {
            cfg.seed = p.unsigned_integer(line_no, value);
        } else if (full == "output.directory") {
            cfg.output_dir = p.path(value);
        }
    }

    const int density_line = cfg.lines.count("source.density") ? cfg.lines.at("source.density") : 0;
    const DensityShape shape = parse_density_shape(density_name);
    if (shape == DensityShape::tabulated) {
        if (!table_path)
            p.fail(density_line, "a tabulated density needs 'table'");
        try {
            cfg.density = load_tabulated_density(*table_path);
        } catch (const Error& e) {
            p.fail(cfg.lines.at("source.table"), e.what());
        }
        const auto& t = cfg.density.table();
        if (!cfg.lines.count("source.power"))
            cfg.power = t.power;
        if (!cfg.lines.count("source.omega0"))
            cfg.omega0 = t.mean;
        if (!cfg.lines.count("source.spread"))
            cfg.spread = t.spread;
    } else {
        if (table_path)
            p.fail(cfg.lines.at("source.table"), "'table' only applies to a tabulated density");
        switch (shape) {
        case DensityShape::dirac: cfg.density = SourceDensity::dirac(); break;
        case DensityShape::gaussian: cfg.density = SourceDensity::gaussian(); break;
        case DensityShape::uniform: cfg.density = SourceDensity::uniform(); break;
        case DensityShape::exponential: cfg.density = SourceDensity::exponential(); break;
        case DensityShape::tabulated: break;
        }
    }

    if (cfg.sensors == 0 && cfg.positions.empty())
        p.fail(cfg.lines.count("geometry") ? cfg.lines.at("geometry") : line_no,
               "geometry needs 'sensors' or 'positions'");
    if (cfg.sensors != 0 && !cfg.positions.empty())
        p.fail(cfg.lines.at("geometry.positions"), "'sensors' and 'positions' are exclusive");

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::config, path.string() + ": cannot open configuration file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string(), path.parent_path());
}

ArrayGeometry ExperimentConfig::geometry() const
{
    return positions.empty() ? ArrayGeometry::ula(sensors, spacing) : ArrayGeometry(positions);
}

SourceTruth ExperimentConfig::truth() const
{
    SourceTruth t;
    t.omega0 = omega0;
    t.spread = spread;
    t.power = power;
    t.noise = noise;
    t.density = density;
    return t;
}

std::vector<EstimatorSpec> ExperimentConfig::estimators() const
{
    std::vector<EstimatorSpec> out;
    for (int d : orders)
        out.push_back({EstimatorKind::momet, d});
    if (gaussian_ml)
        out.push_back({EstimatorKind::gaussian_ml, 0});
    if (gaussian_comet)
        out.push_back({EstimatorKind::gaussian_comet, 0});
    return out;
}

void ExperimentConfig::validate() const
{
    auto line_of = [&](const std::string& key) {
        const auto it = lines.find(key);
        if (it != lines.end())
            return it->second;
        const auto sec = lines.find(key.substr(0, key.find('.')));
        return sec != lines.end() ? sec->second : 0;
    };
    auto fail = [&](const std::string& key, const std::string& msg) {
        throw Error(ErrorCode::config, source_name + ":" + std::to_string(line_of(key)) + ": " + msg);
    };

    if (trials < 1)
        fail("monte_carlo.trials", "trials must be at least 1");
    if (snapshots.empty())
        fail("monte_carlo.snapshots", "at least one snapshot count is needed");
    if (estimators().empty())
        fail("estimators", "no estimator selected");

    std::optional<ArrayGeometry> g;
    try {
        g = geometry();
    } catch (const Error& e) {
        fail(positions.empty() ? "geometry.sensors" : "geometry.positions", e.what());
    }
    const int d_max = max_order(*g);
    for (int d : orders)
        if (d < 2 || d > d_max)
            fail("estimators.momet", "moment order " + std::to_string(d) + " outside [2, " + std::to_string(d_max) +
                                         "] for this array");
    if (weight == WeightSpec::Kind::inverse_sample_covariance)
        for (Index n : snapshots)
            if (n < g->size())
                fail("monte_carlo.snapshots", "the inverse-covariance weight needs N >= M (got N = " +
                                                  std::to_string(n) + ")");
    try {
        truth().validate();
    } catch (const Error& e) {
        fail("source.spread", e.what());
    }
    if (!truth().narrow(*g))
        fail("source.spread", "spread is not small against the ambiguity domain");
    for (std::size_t i = 0; i < spreads.size(); ++i) {
        if (!(spreads[i] > 0.0) || (i > 0 && !(spreads[i] > spreads[i - 1])))
            fail("source.spreads", "spread sweep must be positive and strictly ascending");
        SourceTruth t = truth();
        t.spread = spreads[i];
        if (!t.narrow(*g))
            fail("source.spreads", "sweep spread " + format_double(spreads[i]) + " is not small against the ambiguity domain");
    }
}

// ---------------------------------------------------------------- trials

TrialRunner::TrialRunner(const ExperimentConfig& config)
    : config_(config), geometry_(config.geometry()), truth_(config.truth()),
      population_(true_covariance(truth_, geometry_)), estimators_(config.estimators()),
      resolution_(resolution_ambiguity(geometry_).resolution)
{
    for (const auto& e : estimators_)
        if (e.kind == EstimatorKind::momet)
            models_.push_back(build_model(geometry_, e.order));
}

std::uint64_t TrialRunner::seed(Index snapshots, int trial) const
{
    return trial_seed(trial_seed(config_.seed, static_cast<std::uint64_t>(snapshots)), static_cast<std::uint64_t>(trial));
}

std::vector<ResultRecord> TrialRunner::run(Index snapshots, int trial) const
{
    const std::uint64_t s = seed(snapshots, trial);
    const SnapshotSet x = draw_snapshots(population_, snapshots, s);
    return run(sample_covariance(x), snapshots, trial, s);
}

std::vector<ResultRecord> TrialRunner::run(const HermitianMatrix& sample_cov, Index snapshots, int trial,
                                           std::uint64_t seed) const
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<ResultRecord> out;
    std::optional<Weighting> w;
    std::string weight_status;
    try {
        w = WeightSpec(config_.weight == WeightSpec::Kind::identity ? WeightSpec::identity()
                                                                     : WeightSpec::inverse_sample_covariance())
                .resolve(sample_cov);
    } catch (const Error& e) {
        weight_status = to_string(e.code());
    }

    std::size_t model_index = 0;
    for (const auto& spec : estimators_) {
        ResultRecord r;
        r.experiment = config_.id;
        r.estimator = std::string(to_string(spec.kind));
        r.order = spec.order;
        r.snapshots = snapshots;
        r.trial = trial;
        r.seed = seed;
        r.true_omega0 = truth_.omega0;
        r.true_power = truth_.power;
        r.true_spread = truth_.spread;
        r.true_noise = truth_.noise;
        r.resolution = resolution_;
        const MomentModel* model = spec.kind == EstimatorKind::momet ? &models_[model_index++] : nullptr;

        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (!w && spec.kind != EstimatorKind::gaussian_ml)
                throw Error(ErrorCode::not_positive_definite, weight_status);
            Estimate e;
            switch (spec.kind) {
            case EstimatorKind::momet: e = estimate(*model, sample_cov, *w); break;
            case EstimatorKind::gaussian_comet: e = gaussian_comet_estimate(sample_cov, geometry_, *w); break;
            case EstimatorKind::gaussian_ml:
                e = gaussian_ml_estimate(sample_cov, static_cast<double>(snapshots), geometry_);
                break;
            }
            r.omega0 = e.theta.omega0;
            r.power = e.theta.power();
            r.spread_sq = e.spread_sq;
            r.noise = e.theta.noise();
            r.cost = e.cost;
            r.valid = e.diagnostics.physically_valid && e.diagnostics.converged && !e.diagnostics.ill_conditioned;
        } catch (const Error& e) {
            r.omega0 = r.power = r.spread_sq = r.noise = r.cost = nan;
            r.valid = false;
            r.status = to_string(e.code());
        }
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config, int jobs, const ProgressFn& progress)
{
    config.validate();
    const TrialRunner runner(config);
    const int trials = config.trials;
    const std::size_t total = config.snapshots.size() * static_cast<std::size_t>(trials);
    std::vector<std::vector<ResultRecord>> slots(total);
    std::vector<int> done(config.snapshots.size(), 0);
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            const std::size_t ni = i / static_cast<std::size_t>(trials);
            const int trial = static_cast<int>(i % static_cast<std::size_t>(trials));
            slots[i] = runner.run(config.snapshots[ni], trial);
            if (progress) {
                const std::lock_guard lock(progress_mutex);
                progress(config.snapshots[ni], ++done[ni], trials);
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
    std::vector<std::jthread> pool;
    for (int t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    pool.clear();

    std::vector<ResultRecord> out;
    out.reserve(total * config.estimators().size());
    for (auto& s : slots)
        for (auto& r : s)
            out.push_back(std::move(r));
    return out;
}

// ---------------------------------------------------------------- summaries

namespace {

double normalized(double estimate, double truth, double scale)
{
    return scale != 0.0 ? (estimate - truth) / scale : estimate - truth;
}

std::array<double, 4> normalized_errors(const ResultRecord& r)
{
    const double spread = std::sqrt(std::max(r.spread_sq, 0.0));
    return {normalized(r.omega0, r.true_omega0, r.resolution), normalized(r.power, r.true_power, r.true_power),
            normalized(spread, r.true_spread, r.true_spread), normalized(r.noise, r.true_noise, r.true_noise)};
}

} // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records)
{
    using Key = std::tuple<std::string, int, Index>;
    std::map<Key, std::vector<const ResultRecord*>> groups;
    for (const auto& r : records)
        groups[{r.estimator, r.order, r.snapshots}].push_back(&r);

    std::vector<SummaryRow> out;
    for (const auto& [key, rows] : groups) {
        SummaryRow s;
        std::tie(s.estimator, s.order, s.snapshots) = key;
        s.trials = static_cast<int>(rows.size());
        std::vector<std::array<double, 4>> errs;
        for (const auto* r : rows) {
            if (r->status != "ok")
                ++s.failures;
            else
                errs.push_back(normalized_errors(*r));
        }
        for (std::size_t k = 0; k < 4; ++k) {
            if (errs.empty()) {
                s.rmse[k] = s.bias[k] = s.variance[k] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double sum = 0.0;
            double sum_sq = 0.0;
            for (const auto& e : errs) {
                sum += e[k];
                sum_sq += e[k] * e[k];
            }
            const double n = static_cast<double>(errs.size());
            s.bias[k] = sum / n;
            s.rmse[k] = std::sqrt(sum_sq / n);
            double var = 0.0;
            for (const auto& e : errs)
                var += (e[k] - s.bias[k]) * (e[k] - s.bias[k]);
            s.variance[k] = var / n;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<AsymptoticRow> asymptotic_rows(const ExperimentConfig& config)
{
    const ArrayGeometry g = config.geometry();
    const SourceTruth truth = config.truth();
    const HermitianMatrix r = true_covariance(truth, g);
    const Weighting w = config.weight == WeightSpec::Kind::identity
                            ? Weighting::identity(g.size())
                            : Weighting(HermitianMatrix(r.matrix().inverse()));
    const double resolution = resolution_ambiguity(g).resolution;

    std::vector<AsymptoticRow> out;
    for (int d : config.orders) {
        const MomentModel model = build_model(g, d);
        const AsymptoticReport rep = asymptotic_covariance(model, truth, w);
        const double p0 = rep.theta0.power();
        const double sigma0 = std::sqrt(std::max(rep.theta0.spread_sq(), 0.0));
        const Index last = rep.theta0.linear.size(); // index of the noise in theta
        for (Index n : config.snapshots) {
            AsymptoticRow row;
            row.order = d;
            row.snapshots = n;
            row.spread = truth.spread;
            row.bias = {normalized(rep.theta0.omega0, truth.omega0, resolution), normalized(p0, truth.power, truth.power),
                        normalized(sigma0, truth.spread, truth.spread),
                        normalized(rep.theta0.noise(), truth.noise, truth.noise)};
            const RVector sd = rep.singular ? RVector::Constant(last + 1, std::numeric_limits<double>::quiet_NaN())
                                            : rep.standard_deviations(static_cast<double>(n));
            const double sd_spread = std::sqrt(std::max(rep.spread_variance, 0.0) / static_cast<double>(n));
            auto scaled = [](double v, double scale) { return scale != 0.0 ? v / std::abs(scale) : v; };
            row.std = {scaled(sd(0), resolution), scaled(sd(1), truth.power),
                       std::isnan(rep.spread_variance) ? rep.spread_variance : scaled(sd_spread, truth.spread),
                       scaled(sd(last), truth.noise)};
            row.min_hessian_eigenvalue = rep.min_hessian_eigenvalue;
            row.gradient_norm = rep.gradient_norm;
            row.converged = rep.converged;
            row.singular = rep.singular;
            out.push_back(row);
        }
    }
    return out;
}

std::vector<BiasCurve> bias_curves(const ExperimentConfig& config)
{
    if (config.spreads.empty())
        throw Error(ErrorCode::config, config.source_name + ": the bias curve needs 'spreads' or 'spread_sweep' in [source]");
    const ArrayGeometry g = config.geometry();
    SourceTruth truth = config.truth();
    if (config.weight != WeightSpec::Kind::identity)
        throw Error(ErrorCode::config, config.source_name + ": bias curves are computed with the identity weight only");
    std::vector<BiasCurve> out;
    for (int d : config.orders)
        out.push_back(bias_curve(build_model(g, d), truth, Weighting::identity(g.size()), config.spreads));
    return out;
}

// ---------------------------------------------------------------- CSV

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

constexpr const char* raw_header =
    "experiment,estimator,order,snapshots,trial,seed,omega0,power,spread_sq,noise,cost,valid,status,"
    "true_omega0,true_power,true_spread,true_noise,resolution,wall_time";

constexpr std::array<const char*, 4> parameter_names{"omega0", "power", "spread", "noise"};

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

double parse_csv_double(const std::string& s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument(s);
    return x;
}

template <class T>
T parse_csv_integer(const std::string& s)
{
    T x{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument(s);
    return x;
}

} // namespace

void write_raw_csv(std::ostream& os, const std::vector<ResultRecord>& records)
{
    os << raw_header << '\n';
    for (const auto& r : records) {
        os << r.experiment << ',' << r.estimator << ',' << r.order << ',' << r.snapshots << ',' << r.trial << ','
           << r.seed << ',' << format_double(r.omega0) << ',' << format_double(r.power) << ','
           << format_double(r.spread_sq) << ',' << format_double(r.noise) << ',' << format_double(r.cost) << ','
           << (r.valid ? 1 : 0) << ',' << r.status << ',' << format_double(r.true_omega0) << ','
           << format_double(r.true_power) << ',' << format_double(r.true_spread) << ','
           << format_double(r.true_noise) << ',' << format_double(r.resolution) << ',' << format_double(r.wall_time)
           << '\n';
    }
}

std::vector<ResultRecord> read_raw_csv(std::istream& is, const std::string& source_name)
{
    std::string line;
    if (!std::getline(is, line))
        throw Error(ErrorCode::io, source_name + ": empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != raw_header)
        throw Error(ErrorCode::io, source_name + ":1: unexpected header");
    std::vector<ResultRecord> out;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 19)
            throw Error(ErrorCode::io, source_name + ":" + std::to_string(line_no) + ": expected 19 fields, got " +
                                           std::to_string(f.size()));
        try {
            ResultRecord r;
            r.experiment = f[0];
            r.estimator = f[1];
            (void)parse_estimator_kind(r.estimator);
            r.order = parse_csv_integer<int>(f[2]);
            r.snapshots = parse_csv_integer<Index>(f[3]);
            r.trial = parse_csv_integer<int>(f[4]);
            r.seed = parse_csv_integer<std::uint64_t>(f[5]);
            r.omega0 = parse_csv_double(f[6]);
            r.power = parse_csv_double(f[7]);
            r.spread_sq = parse_csv_double(f[8]);
            r.noise = parse_csv_double(f[9]);
            r.cost = parse_csv_double(f[10]);
            if (f[11] != "0" && f[11] != "1")
                throw std::invalid_argument(f[11]);
            r.valid = f[11] == "1";
            r.status = f[12];
            r.true_omega0 = parse_csv_double(f[13]);
            r.true_power = parse_csv_double(f[14]);
            r.true_spread = parse_csv_double(f[15]);
            r.true_noise = parse_csv_double(f[16]);
            r.resolution = parse_csv_double(f[17]);
            r.wall_time = parse_csv_double(f[18]);
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::io, source_name + ":" + std::to_string(line_no) + ": malformed field '" +
                                           std::string(e.what()) + "'");
        }
    }
    if (out.empty())
        throw Error(ErrorCode::io, source_name + ": no result rows");
    return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows)
{
    os << "# normalization: omega0 errors divided by the array resolution; power, spread and noise errors divided "
          "by their true value\n";
    os << "estimator,order,snapshots,trials,failures";
    for (const char* stat : {"rmse", "bias", "variance"})
        for (const char* p : parameter_names)
            os << ',' << stat << '_' << p;
    os << '\n';
    for (const auto& s : rows) {
        os << s.estimator << ',' << s.order << ',' << s.snapshots << ',' << s.trials << ',' << s.failures;
        for (const auto* stat : {&s.rmse, &s.bias, &s.variance})
            for (double v : *stat)
                os << ',' << format_double(v);
        os << '\n';
    }
}

void write_asymptotic_csv(std::ostream& os, const std::vector<AsymptoticRow>& rows)
{
    os << "# normalization: as in summary.csv\n";
    os << "order,snapshots,spread";
    for (const char* stat : {"bias", "std"})
        for (const char* p : parameter_names)
            os << ',' << stat << '_' << p;
    os << ",min_hessian_eigenvalue,gradient_norm,converged,singular\n";
    for (const auto& r : rows) {
        os << r.order << ',' << r.snapshots << ',' << format_double(r.spread);
        for (const auto* stat : {&r.bias, &r.std})
            for (double v : *stat)
                os << ',' << format_double(v);
        os << ',' << format_double(r.min_hessian_eigenvalue) << ',' << format_double(r.gradient_norm) << ','
           << (r.converged ? 1 : 0) << ',' << (r.singular ? 1 : 0) << '\n';
    }
}

void write_bias_curve_csv(std::ostream& os, const std::vector<BiasCurve>& curves, const ExperimentConfig& config)
{
    const ArrayGeometry g = config.geometry();
    const double resolution = resolution_ambiguity(g).resolution;
    os << "# normalization: as in summary.csv; norm is the unnormalized ||theta0 - theta_true||\n";
    os << "order,spread,bias_omega0,bias_power,bias_spread,bias_noise,norm,converged\n";
    for (const auto& c : curves)
        for (const auto& r : c.rows) {
            const Index last = r.bias.size() - 1;
            os << c.order << ',' << format_double(r.spread) << ',' << format_double(r.bias(0) / resolution) << ','
               << format_double(r.bias(1) / config.power) << ','
               << format_double(r.spread > 0.0 ? r.spread_bias / r.spread : r.spread_bias) << ','
               << format_double(config.noise != 0.0 ? r.bias(last) / config.noise : r.bias(last)) << ','
               << format_double(r.norm) << ',' << (r.converged ? 1 : 0) << '\n';
        }
}

void write_bias_slopes_csv(std::ostream& os, const std::vector<BiasCurve>& curves)
{
    os << "# log-log slopes of the unnormalized biases over the lowest decade of spreads\n";
    os << "order,slope_norm,slope_omega0,slope_power,slope_spread,slope_noise,floor\n";
    for (const auto& c : curves) {
        const Index last = c.slopes.size() - 1;
        os << c.order << ',' << format_double(c.norm_slope) << ',' << format_double(c.slopes(0)) << ','
           << format_double(c.slopes(1)) << ',' << format_double(c.spread_slope) << ','
           << format_double(c.slopes(last)) << ',' << format_double(c.floor) << '\n';
    }
}

} // namespace momet::bench
