#include "dpcmerge/batch.hpp"

#include "dpcmerge/scenario_sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace dpcmerge {

namespace fs = std::filesystem;

const char* to_string(Metric m) {
    switch (m) {
        case Metric::Pake: return "pake_whpkm";
        case Metric::Be: return "be_whpkm";
        case Metric::Tel: return "tel_whpkm";
        case Metric::TravelTime: return "travel_time_s";
        case Metric::AvgSpeed: return "avg_speed_mps";
        case Metric::H0Min: return "h0_min_m2";
    }
    return "unknown";
}

double metric_value(const MetricsReport& r, Metric m) {
    switch (m) {
        case Metric::Pake: return r.energy.pake_whpkm;
        case Metric::Be: return r.energy.be_whpkm;
        case Metric::Tel: return r.energy.tel_whpkm;
        case Metric::TravelTime: return r.flow.travel_time_s;
        case Metric::AvgSpeed: return r.flow.avg_speed_mps;
        case Metric::H0Min: return r.h0_min_m2;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

const ControllerSummary& BatchSummary::at(ControllerKind kind) const {
    const auto it = controllers.find(kind);
    if (it == controllers.end()) throw std::out_of_range(std::string("controller not in batch: ") + to_string(kind));
    return it->second;
}

bool BatchSummary::any_gridlock() const {
    return std::any_of(controllers.begin(), controllers.end(),
                       [](const auto& c) { return c.second.gridlock_runs > 0; });
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    double sum = 0.0;
    for (const double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++a.count;
        }
    if (a.count == 0) {
        a.mean = std::numeric_limits<double>::quiet_NaN();
        return a;
    }
    a.mean = sum / a.count;
    double ss = 0.0;
    for (const double v : values)
        if (std::isfinite(v)) ss += (v - a.mean) * (v - a.mean);
    a.stddev = a.count > 1 ? std::sqrt(ss / (a.count - 1)) : 0.0;
    return a;
}

BatchSummary run_batch(const ScenarioConfig& cfg, const std::vector<ControllerKind>& controllers,
                       const BatchOptions& options) {
    cfg.validate();
    if (controllers.empty()) throw std::invalid_argument("no controllers requested");
    const CoastDownTable table =
        cfg.coast_down_csv.empty() ? CoastDownTable::builtin() : CoastDownTable::load_csv(cfg.coast_down_csv);

    const auto runs = static_cast<std::size_t>(cfg.runs);
    std::vector<std::vector<RunResult>> results(controllers.size(), std::vector<RunResult>(runs));

    if (options.out_dir)
        for (const ControllerKind k : controllers) fs::create_directories(*options.out_dir / "runs" / to_string(k));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < runs; k = next++) {
            try {
                const Scenario sc = sample_scenario(cfg, k, table);
                const std::uint64_t hash = scenario_hash(sc);
                const auto params = sc.params_by_id();
                for (std::size_t c = 0; c < controllers.size(); ++c) {
                    SimulationSettings settings;
                    settings.controller = controllers[c];
                    settings.gains = cfg.gains_for(controllers[c]);
                    const RunLog log = run_scenario(sc, settings);
                    results[c][k] = {compute_metrics(log, params, sc.road), hash};
                    if (options.out_dir && static_cast<int>(k) < options.max_run_logs) {
                        const fs::path path =
                            *options.out_dir / "runs" / to_string(controllers[c]) / (std::to_string(k) + ".csv");
                        std::ofstream out(path);
                        if (!out) throw std::runtime_error("cannot write " + path.string());
                        write_step_log_csv(out, log);
                    }
                }
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(cfg.workers, cfg.runs));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    BatchSummary summary;
    summary.seed = cfg.seed;
    summary.runs = cfg.runs;
    for (std::size_t c = 0; c < controllers.size(); ++c) {
        ControllerSummary cs;
        cs.kind = controllers[c];
        cs.runs = std::move(results[c]);
        for (const Metric m : {Metric::Pake, Metric::Be, Metric::Tel, Metric::TravelTime, Metric::AvgSpeed,
                               Metric::H0Min}) {
            std::vector<double> values;
            values.reserve(runs);
            for (const RunResult& r : cs.runs) values.push_back(metric_value(r.metrics, m));
            cs.aggregates[m] = aggregate(values);
        }
        for (const RunResult& r : cs.runs) {
            cs.collision_runs += r.metrics.collided() ? 1 : 0;
            cs.infeasible_runs += r.metrics.infeasible_flags > 0 ? 1 : 0;
            cs.gridlock_runs += r.metrics.flow.gridlock ? 1 : 0;
        }
        summary.controllers[cs.kind] = std::move(cs);
    }
    if (const auto fifo = summary.controllers.find(ControllerKind::Fifo); fifo != summary.controllers.end()) {
        for (const auto& [kind, cs] : summary.controllers) {
            if (kind == ControllerKind::Fifo) continue;
            for (const Metric m : kTableMetrics) {
                const double base = fifo->second.aggregates.at(m).mean;
                summary.percent_vs_fifo[kind][m] = 100.0 * (cs.aggregates.at(m).mean - base) / base;
            }
        }
    }
    return summary;
}

double Histogram::mean() const {
    double s = 0.0;
    for (const double x : sums) s += x;
    return s / total();
}

int Histogram::total() const {
    int n = 0;
    for (const int c : counts) n += c;
    return n;
}

Histogram build_histogram(const std::vector<double>& values, int bins) {
    if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
    std::vector<double> finite;
    for (const double v : values)
        if (std::isfinite(v)) finite.push_back(v);
    if (finite.empty()) throw std::invalid_argument("empty metric series");
    const auto [lo_it, hi_it] = std::minmax_element(finite.begin(), finite.end());
    const double lo = *lo_it, hi = *hi_it;
    Histogram h;
    if (lo == hi) {
        h.edges = {lo, hi};
        h.counts = {static_cast<int>(finite.size())};
        h.sums = {0.0};
        for (const double v : finite) h.sums[0] += v;
        return h;
    }
    const double width = (hi - lo) / bins;
    for (int b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + b * width);
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    h.sums.assign(static_cast<std::size_t>(bins), 0.0);
    for (const double v : finite) {
        const auto b = std::min<std::size_t>(static_cast<std::size_t>((v - lo) / width),
                                             static_cast<std::size_t>(bins - 1));
        ++h.counts[b];
        h.sums[b] += v;
    }
    return h;
}

void emit_histograms(const BatchSummary& summary, const fs::path& out_dir, int bins) {
    fs::create_directories(out_dir);
    for (const auto& [kind, cs] : summary.controllers) {
        for (const Metric m : {Metric::Pake, Metric::Be, Metric::Tel, Metric::TravelTime, Metric::AvgSpeed,
                               Metric::H0Min}) {
            std::vector<double> values;
            for (const RunResult& r : cs.runs) values.push_back(metric_value(r.metrics, m));
            const Histogram h = build_histogram(values, bins);
            const fs::path path = out_dir / ("hist_" + std::string(to_string(m)) + "_" + to_string(kind) + ".csv");
            std::ofstream out(path);
            if (!out) throw std::runtime_error("cannot write " + path.string());
            out.precision(17);
            out << "bin_lo,bin_hi,count,sum\n";
            for (std::size_t b = 0; b < h.counts.size(); ++b)
                out << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << ',' << h.sums[b] << '\n';
        }
    }
}

nlohmann::json to_json(const MetricsReport& r) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    return {{"pake_whpkm", r.energy.pake_whpkm},
            {"be_whpkm", r.energy.be_whpkm},
            {"tel_whpkm", r.energy.tel_whpkm},
            {"travel_time_s", num(r.flow.travel_time_s)},
            {"avg_speed_mps", r.flow.avg_speed_mps},
            {"h0_min_m2", num(r.h0_min_m2)},
            {"collisions", r.collision_steps},
            {"infeasible_flags", r.infeasible_flags},
            {"gridlock", r.flow.gridlock}};
}

nlohmann::json to_json(const BatchSummary& s) {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["runs"] = s.runs;
    for (const auto& [kind, cs] : s.controllers) {
        nlohmann::json c;
        for (const auto& [m, a] : cs.aggregates)
            c["aggregates"][to_string(m)] = {{"mean", std::isfinite(a.mean) ? nlohmann::json(a.mean) : nullptr},
                                             {"std", a.stddev},
                                             {"count", a.count}};
        c["collision_runs"] = cs.collision_runs;
        c["infeasible_runs"] = cs.infeasible_runs;
        c["gridlock_runs"] = cs.gridlock_runs;
        for (const RunResult& r : cs.runs) {
            nlohmann::json run = to_json(r.metrics);
            run["scenario_hash"] = r.scenario_hash;
            c["per_run"].push_back(run);
        }
        j["controllers"][to_string(kind)] = c;
    }
    for (const auto& [kind, pct] : s.percent_vs_fifo)
        for (const auto& [m, v] : pct) j["percent_change_vs_fifo"][to_string(kind)][to_string(m)] = v;
    return j;
}

void write_summary_json(const BatchSummary& s, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(s).dump(2) << '\n';
}

}  // namespace dpcmerge
