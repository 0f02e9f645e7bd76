#include "dpcmerge/batch.hpp"
#include "dpcmerge/config.hpp"
#include "dpcmerge/metrics.hpp"
#include "dpcmerge/scenario_sampling.hpp"
#include "dpcmerge/simulation.hpp"
#include "dpcmerge/tuning_analysis.hpp"
#include "dpcmerge/verify/invariant_suite.hpp"
#include "dpcmerge/verify/qp_oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dpcmerge;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<int> workers;
    std::vector<std::string> controllers;
    std::string out_dir;
};

// Flag first, then DPCMERGE_OUT_DIR, then ./out.
fs::path resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("DPCMERGE_OUT_DIR"); env && *env) return env;
    return "out";
}

ScenarioConfig load(const CommonOptions& o) {
    ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.runs) cfg.runs = *o.runs;
    if (o.workers) cfg.workers = *o.workers;
    return cfg;
}

std::vector<ControllerKind> parse_controllers(const std::vector<std::string>& names,
                                              std::vector<ControllerKind> fallback) {
    if (names.empty()) return fallback;
    std::vector<ControllerKind> out;
    for (const std::string& n : names) {
        const ControllerKind k = controller_from_string(n);
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool batch) {
    cmd->add_option("--config", o.config, "Scenario config file")->check(CLI::ExistingFile);
    cmd->add_option("--controllers", o.controllers, "Subset of dpc-cbf, c-cbf, fifo")->delimiter(',');
    cmd->add_option("--out-dir", o.out_dir, "Output directory (default $DPCMERGE_OUT_DIR or ./out)");
    if (batch) {
        cmd->add_option("--runs", o.runs, "Number of runs")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", o.seed, "Batch seed");
        cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    }
}

void print_summary(const BatchSummary& s) {
    std::cout << std::fixed << std::setprecision(3);
    std::cout << "controller,pake_whpkm,be_whpkm,tel_whpkm,travel_time_s,avg_speed_mps,collision_runs,"
                 "infeasible_runs,gridlock_runs\n";
    for (const auto& [kind, cs] : s.controllers) {
        std::cout << to_string(kind);
        for (const Metric m : kTableMetrics) std::cout << ',' << cs.aggregates.at(m).mean;
        std::cout << ',' << cs.collision_runs << ',' << cs.infeasible_runs << ',' << cs.gridlock_runs << '\n';
    }
    for (const auto& [kind, pct] : s.percent_vs_fifo) {
        std::cout << to_string(kind) << " vs fifo (%)";
        for (const Metric m : kTableMetrics) std::cout << ' ' << to_string(m) << '=' << pct.at(m);
        std::cout << '\n';
    }
}

int run_batch_command(const ScenarioConfig& cfg, const std::vector<ControllerKind>& kinds, const fs::path& out,
                      int max_run_logs, int bins) {
    fs::create_directories(out);
    BatchOptions opts;
    opts.out_dir = out;
    opts.max_run_logs = max_run_logs;
    const auto t0 = std::chrono::steady_clock::now();
    const BatchSummary summary = run_batch(cfg, kinds, opts);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_summary_json(summary, out / "summary.json");
    emit_histograms(summary, out, bins);
    print_summary(summary);
    std::cout << "runs=" << cfg.runs << " seed=" << cfg.seed << " wall_s=" << seconds << " out=" << out.string()
              << '\n';
    if (summary.any_gridlock()) {
        std::cerr << "gridlock detected\n";
        return 2;
    }
    return 0;
}

int demo4(const CommonOptions& o) {
    const ScenarioConfig cfg = load(o);
    const Scenario sc = four_vehicle_scenario();
    const fs::path out = resolve_out_dir(o.out_dir);
    const auto kinds = parse_controllers(
        o.controllers, {ControllerKind::DpcCbf, ControllerKind::CCbf, ControllerKind::Fifo});
    bool gridlock = false;
    for (const ControllerKind kind : kinds) {
        SimulationSettings settings;
        settings.controller = kind;
        settings.gains = cfg.gains_for(kind);
        const auto t0 = std::chrono::steady_clock::now();
        const RunLog log = run_scenario(sc, settings);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const MetricsReport m = compute_metrics(log, sc.params_by_id(), sc.road);
        double vmin = 1e300, amin = 1e300, amax = -1e300;
        for (const StepRecord& s : log.steps)
            for (const VehicleRecord& v : s.vehicles) {
                vmin = std::min(vmin, v.speed);
                amin = std::min(amin, v.accel);
                amax = std::max(amax, v.accel);
            }
        std::string order;
        for (const CrossingEvent& c : log.diagnostics.merge_crossings)
            order += (order.empty() ? "" : "-") + sc.vehicle(c.id).label;
        std::cout << to_string(kind) << ": order " << order << ", min speed " << vmin << " m/s, accel [" << amin
                  << ", " << amax << "] m/s^2, h0_min " << m.h0_min_m2 << " m^2, " << seconds * 1e3 << " ms\n";
        fs::create_directories(out / "runs" / to_string(kind));
        std::ofstream csv(out / "runs" / to_string(kind) / "demo4.csv");
        if (!csv) throw std::runtime_error("cannot write under " + out.string());
        write_step_log_csv(csv, log);
        gridlock = gridlock || log.diagnostics.gridlock;
    }
    return gridlock ? 2 : 0;
}

int tuning(double gamma_deg, double kmin, double kmax, int steps, const std::string& out_dir) {
    const TwoVehicleTuning fleet = fleet_average_tuning(gamma_deg * 3.14159265358979323846 / 180.0);
    std::vector<double> kappas;
    for (int i = 0; i < steps; ++i) kappas.push_back(steps == 1 ? kmin : kmin + (kmax - kmin) * i / (steps - 1));
    std::ostringstream csv;
    csv << std::setprecision(10) << "kappa,stable,unstable\n";
    for (const KappaRow& r : kappa_sweep(fleet.v0.norm(), fleet.D, kappas))
        csv << r.kappa << ',' << r.stable << ',' << r.unstable << '\n';
    std::cout << csv.str();

    const MuEigenvalues right_angle = mu_eigenvalues(fleet);
    const MuEigenvalues general = mu_eigenvalues_general(fleet);
    std::cerr << std::setprecision(6) << "fleet average: kappa " << fleet.kappa << ", D " << fleet.D
              << ", unstable (perpendicular formula) " << right_angle.unstable << ", unstable (at this angle) "
              << general.unstable << '\n';
    if (!out_dir.empty() || std::getenv("DPCMERGE_OUT_DIR")) {
        const fs::path out = resolve_out_dir(out_dir);
        fs::create_directories(out);
        std::ofstream f(out / "tuning.csv");
        if (!(f << csv.str())) throw std::runtime_error("cannot write " + (out / "tuning.csv").string());
    }
    return 0;
}

int verify_command(const CommonOptions& o, int cases, int invariant_runs) {
    ScenarioConfig cfg = load(o);
    const verify::OracleSuiteReport qp = verify::run_qp_oracle_suite(cfg.seed, cases);
    std::cout << (qp.passed() ? "PASS" : "FAIL") << " qp_oracle: " << qp.summary() << '\n';
    bool ok = qp.passed();
    for (const verify::InvariantCheck& c : verify::run_invariant_suite(cfg, invariant_runs)) {
        std::cout << (c.passed ? "PASS" : "FAIL") << ' ' << c.name << ": " << c.detail << '\n';
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized CBF merging simulator"};
    app.require_subcommand(1);

    CommonOptions demo_opts, mc_opts, fault_opts, verify_opts;
    int max_run_logs = 10, bins = 20;

    auto* demo = app.add_subcommand("demo4", "Four-vehicle deterministic merge");
    add_common(demo, demo_opts, false);

    auto* mc = app.add_subcommand("mc", "Nominal Monte Carlo batch");
    add_common(mc, mc_opts, true);
    mc->add_option("--run-logs", max_run_logs, "Write step logs for the first N runs")->check(CLI::NonNegativeNumber);
    mc->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);

    auto* fault = app.add_subcommand("fault-mc", "Power-loss fault campaign");
    add_common(fault, fault_opts, true);
    fault->add_option("--run-logs", max_run_logs, "Write step logs for the first N runs")
        ->check(CLI::NonNegativeNumber);
    fault->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
    double trigger_s = -150.0;
    fault->add_option("--trigger-s", trigger_s, "Victim loses power at this arc position (m)");

    auto* tune = app.add_subcommand("tuning", "Eigenvalues of the contested two-vehicle loop over kappa");
    double gamma_deg = 90.0, kmin = 0.1, kmax = 3.0;
    int ksteps = 30;
    std::string tune_out;
    tune->add_option("--gamma-deg", gamma_deg, "Merge angle in degrees")->check(CLI::Range(0.0, 90.0));
    tune->add_option("--kappa-min", kmin)->check(CLI::PositiveNumber);
    tune->add_option("--kappa-max", kmax)->check(CLI::PositiveNumber);
    tune->add_option("--kappa-steps", ksteps)->check(CLI::PositiveNumber);
    tune->add_option("--out-dir", tune_out, "Also write tuning.csv here");

    auto* ver = app.add_subcommand("verify", "QP oracle and invariant suites");
    add_common(ver, verify_opts, true);
    int cases = 1000, invariant_runs = 5;
    ver->add_option("--cases", cases, "Random QP problems")->check(CLI::PositiveNumber);
    ver->add_option("--invariant-runs", invariant_runs, "Sampled scenarios for invariant checks")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*demo) return demo4(demo_opts);
        if (*mc) {
            const ScenarioConfig cfg = load(mc_opts);
            const auto kinds = parse_controllers(
                mc_opts.controllers, {ControllerKind::DpcCbf, ControllerKind::CCbf, ControllerKind::Fifo});
            return run_batch_command(cfg, kinds, resolve_out_dir(mc_opts.out_dir), max_run_logs, bins);
        }
        if (*fault) {
            if (!fault_opts.runs) fault_opts.runs = 100;
            ScenarioConfig cfg = load(fault_opts);
            if (!cfg.fault) cfg.fault = FaultCampaign{};
            if (fault->count("--trigger-s")) cfg.fault->trigger_s = trigger_s;
            const auto kinds =
                parse_controllers(fault_opts.controllers, {ControllerKind::DpcCbf, ControllerKind::CCbf});
            return run_batch_command(cfg, kinds, resolve_out_dir(fault_opts.out_dir), max_run_logs, bins);
        }
        if (*tune) return tuning(gamma_deg, kmin, kmax, ksteps, tune_out);
        if (*ver) return verify_command(verify_opts, cases, invariant_runs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
