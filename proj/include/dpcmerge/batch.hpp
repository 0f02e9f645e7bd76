#pragma once

#include "dpcmerge/config.hpp"
#include "dpcmerge/metrics.hpp"
#include "dpcmerge/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpcmerge {

enum class Metric { Pake, Be, Tel, TravelTime, AvgSpeed, H0Min };

inline constexpr Metric kTableMetrics[] = {Metric::Pake, Metric::Be, Metric::Tel, Metric::TravelTime,
                                           Metric::AvgSpeed};

const char* to_string(Metric m);
double metric_value(const MetricsReport& r, Metric m);

struct RunResult {
    MetricsReport metrics;
    std::uint64_t scenario_hash = 0;
};

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
    int count = 0;        // finite values only
};

struct ControllerSummary {
    ControllerKind kind = ControllerKind::DpcCbf;
    std::vector<RunResult> runs;  // indexed by run
    std::map<Metric, Aggregate> aggregates;
    int collision_runs = 0;
    int infeasible_runs = 0;
    int gridlock_runs = 0;
};

struct BatchSummary {
    std::uint64_t seed = 0;
    int runs = 0;
    std::map<ControllerKind, ControllerSummary> controllers;
    // 100 (mean_c - mean_fifo) / mean_fifo, on means.
    std::map<ControllerKind, std::map<Metric, double>> percent_vs_fifo;

    const ControllerSummary& at(ControllerKind kind) const;
    bool any_gridlock() const;
};

struct BatchOptions {
    std::optional<std::filesystem::path> out_dir;
    int max_run_logs = 10;  // step-log CSVs written for runs k < max_run_logs
};

// Run k of every requested controller consumes the same sampled scenario.
// Results do not depend on cfg.workers.
BatchSummary run_batch(const ScenarioConfig& cfg, const std::vector<ControllerKind>& controllers,
                       const BatchOptions& options = {});

Aggregate aggregate(const std::vector<double>& values);

struct Histogram {
    std::vector<double> edges;  // bins + 1 edges
    std::vector<int> counts;
    std::vector<double> sums;   // exact values retained per bin

    double mean() const;
    int total() const;
};

// Equal-width bins over [min, max]; identical values collapse into one bin.
// Non-finite values are skipped. Throws std::invalid_argument when nothing is left.
Histogram build_histogram(const std::vector<double>& values, int bins = 20);

// hist_<metric>_<controller>.csv for every metric and controller.
void emit_histograms(const BatchSummary& summary, const std::filesystem::path& out_dir, int bins = 20);

nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const BatchSummary& s);
void write_summary_json(const BatchSummary& s, const std::filesystem::path& path);

}  // namespace dpcmerge
