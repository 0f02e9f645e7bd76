// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "dpcmerge/batch.hpp"
#include "dpcmerge/config.hpp"
#include "dpcmerge/controllers.hpp"
#include "dpcmerge/metrics.hpp"
#include "dpcmerge/scenario_sampling.hpp"
#include "dpcmerge/simulation.hpp"
#include "dpcmerge/tuning_analysis.hpp"
#include "dpcmerge/verify/invariant_suite.hpp"
#include "dpcmerge/verify/qp_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace dpcmerge;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << id << ". " << title << " | " << detail << std::endl;
}

struct Notes {
    std::ostringstream os;
    bool ok = true;

    Notes() { os << std::setprecision(4); }

    template <class... T>
    void check(bool cond, const T&... parts) {
        ok = ok && cond;
        if (os.tellp() > 0) os << "; ";
        (os << ... << parts);
        if (!cond) os << " [X]";
    }
    std::string str() const { return os.str(); }
};

std::string order(const Scenario& sc, const RunLog& log) {
    std::string out;
    for (const CrossingEvent& c : log.diagnostics.merge_crossings)
        out += (out.empty() ? "" : "-") + sc.vehicle(c.id).label;
    return out;
}

void four_vehicle() {
    const ScenarioConfig cfg;
    const Scenario sc = four_vehicle_scenario();
    Notes n;
    const auto t0 = Clock::now();
    SimulationSettings st;
    st.gains = cfg.dpc;
    const RunLog dpc = run_scenario(sc, st);
    st.controller = ControllerKind::Fifo;
    st.gains = cfg.fifo;
    const RunLog fifo = run_scenario(sc, st);
    const double elapsed = seconds_since(t0);

    double vmin = 1e300, amin = 1e300, amax = -1e300;
    for (const RunLog* log : {&dpc, &fifo})
        for (const StepRecord& s : log->steps)
            for (const VehicleRecord& v : s.vehicles) {
                if (log == &dpc) vmin = std::min(vmin, v.speed);
                amin = std::min(amin, v.accel);
                amax = std::max(amax, v.accel);
            }
    const double h0 = h0_min(dpc, [&] {
        std::map<VehicleId, double> r;
        for (const VehicleSpec& v : sc.vehicles) r[v.id] = v.params.radius_m;
        return r;
    }(), sc.road);

    n.check(order(sc, dpc) == "M1-H1-M2-H2", "DPC-CBF order ", order(sc, dpc));
    n.check(order(sc, fifo) == "M1-H1-H2-M2", "FIFO order ", order(sc, fifo));
    n.check(vmin >= 5.0, "DPC-CBF min speed ", vmin, " m/s");
    n.check(amin >= -6.0 - 1e-12 && amax <= 5.0 + 1e-12, "accel range [", amin, ", ", amax, "]");
    n.check(h0 > 0.0, "h0_min ", h0, " m^2");
    n.check(elapsed < 5.0, "runtime ", elapsed, " s");
    report(1, "four-vehicle deterministic scenario", n.ok, n.str());
}

struct Nominal {
    BatchSummary summary;
    double seconds = 0.0;
};

Nominal nominal_batch() {
    ScenarioConfig cfg;
    cfg.runs = 500;
    const auto t0 = Clock::now();
    Nominal out{run_batch(cfg, {ControllerKind::DpcCbf, ControllerKind::CCbf, ControllerKind::Fifo}), 0.0};
    out.seconds = seconds_since(t0);
    return out;
}

void nominal_safety(const Nominal& nb) {
    Notes n;
    for (const ControllerKind kind : {ControllerKind::DpcCbf, ControllerKind::Fifo}) {
        const ControllerSummary& cs = nb.summary.at(kind);
        int bad_h0 = 0;
        for (const RunResult& r : cs.runs) bad_h0 += (r.metrics.h0_min_m2 > 0.0) ? 0 : 1;
        n.check(cs.collision_runs == 0 && bad_h0 == 0, to_string(kind), " collision runs ", cs.collision_runs,
                " (h0_min <= 0 in ", bad_h0, ")");
    }
    n.check(nb.summary.at(ControllerKind::DpcCbf).infeasible_runs == 0, "DPC-CBF infeasible runs ",
            nb.summary.at(ControllerKind::DpcCbf).infeasible_runs);
    n.check(nb.summary.runs == 500 && nb.summary.at(ControllerKind::Fifo).runs.at(0).metrics.energy.vehicles.size() == 20,
            nb.summary.runs, " runs x 20 vehicles");
    report(2, "nominal Monte Carlo safety", n.ok, n.str());
}

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }

void table_reproduction(const Nominal& nb) {
    const BatchSummary& s = nb.summary;
    const auto& pct = s.percent_vs_fifo.at(ControllerKind::DpcCbf);
    const auto& dpc = s.at(ControllerKind::DpcCbf);
    const auto& fifo = s.at(ControllerKind::Fifo);
    Notes n;
    int unpaired = 0;
    for (std::size_t k = 0; k < dpc.runs.size(); ++k) unpaired += dpc.runs[k].scenario_hash != fifo.runs[k].scenario_hash;
    n.check(unpaired == 0, "paired runs");
    n.check(within(pct.at(Metric::Pake), -38.0, 8.0), "PaKE ", pct.at(Metric::Pake), "% (-38 +- 8)");
    n.check(within(pct.at(Metric::Be), -46.6, 8.0), "BE ", pct.at(Metric::Be), "% (-46.6 +- 8)");
    n.check(within(pct.at(Metric::Tel), -23.2, 6.0), "TEL ", pct.at(Metric::Tel), "% (-23.2 +- 6)");
    n.check(within(pct.at(Metric::TravelTime), -3.5, 2.0), "travel time ", pct.at(Metric::TravelTime),
            "% (-3.5 +- 2)");
    n.check(within(pct.at(Metric::AvgSpeed), 5.5, 2.0), "avg speed ", pct.at(Metric::AvgSpeed), "% (+5.5 +- 2)");
    const double saving = fifo.aggregates.at(Metric::TravelTime).mean - dpc.aggregates.at(Metric::TravelTime).mean;
    n.check(within(saving, 1.4, 1.0), "travel-time saving ", saving, " s (1.4 +- 1)");
    const double fifo_tel = fifo.aggregates.at(Metric::Tel).mean;
    n.check(fifo_tel >= 251.0 * 0.6 && fifo_tel <= 251.0 * 1.4, "FIFO TEL ", fifo_tel, " Wh/km (251 +- 40%)");
    n.check(nb.seconds < 1800.0, "batch runtime ", nb.seconds, " s");
    report(3, "DPC-CBF vs FIFO percent changes", n.ok, n.str());
}

void ccbf_closeness(const Nominal& nb) {
    const auto& dpc = nb.summary.percent_vs_fifo.at(ControllerKind::DpcCbf);
    const auto& ccbf = nb.summary.percent_vs_fifo.at(ControllerKind::CCbf);
    Notes n;
    for (const Metric m : kTableMetrics) {
        const double d = dpc.at(m), c = ccbf.at(m);
        // Lower is better except for average speed.
        const bool ccbf_not_worse = m == Metric::AvgSpeed ? c >= d : c <= d;
        n.check(std::abs(c - d) <= 3.0 && ccbf_not_worse, to_string(m), " C-CBF ", c, " vs DPC-CBF ", d, " (gap ",
                std::abs(c - d), " pp, C-CBF ", ccbf_not_worse ? "not worse" : "worse", ")");
    }
    report(4, "C-CBF within 3 pp of DPC-CBF and not worse", n.ok, n.str());
}

void fault_campaign() {
    ScenarioConfig cfg;
    cfg.runs = 100;
    cfg.fault = FaultCampaign{};
    const BatchSummary s = run_batch(cfg, {ControllerKind::DpcCbf, ControllerKind::CCbf});
    int highway = 0;
    for (int k = 0; k < cfg.runs; ++k) {
        const Scenario sc = sample_scenario(cfg, static_cast<std::uint64_t>(k));
        highway += sc.vehicle(sc.fault->victim).lane == Lane::Highway;
    }
    const int dpc = s.at(ControllerKind::DpcCbf).collision_runs;
    const int ccbf = s.at(ControllerKind::CCbf).collision_runs;
    Notes n;
    n.check(highway == 50, "victims ", highway, " highway / ", cfg.runs - highway, " merge");
    n.check(ccbf > dpc, "collision runs C-CBF ", ccbf, " vs DPC-CBF ", dpc);
    n.check(dpc <= 20, "DPC-CBF fraction ", dpc / 100.0);
    report(5, "power-loss fault campaign", n.ok, n.str());
}

void qp_oracle() {
    const verify::OracleSuiteReport r = verify::run_qp_oracle_suite(20240601, 1000, 1e-7, 1e-8);
    Notes n;
    n.check(r.passed() && r.cases == 1000, r.summary());

    // Equal-weight contested pair with the barrier row binding.
    QpProblem p = QpProblem::with_size(2);
    const Eigen::Vector2d v_bar(21.7, 22.9), b(-41.3, -38.8);
    const double a = 1700.0;
    p.hessian_diag.setConstant(2.0);
    p.linear_cost = -2.0 * v_bar;
    p.add_inequality(b, -a);
    QpSolver solver;
    const QpSolution sol = solver.solve(p);
    const Eigen::Vector2d closed = v_bar - ((a + b.dot(v_bar)) / b.squaredNorm()) * b;
    const double err = sol.optimal() ? (sol.u_star - closed).lpNorm<Eigen::Infinity>() : INFINITY;
    n.check(a + b.dot(v_bar) < 0.0 && err <= 1e-9, "two-vehicle closed form error ", err);
    report(6, "QP solver oracle suite", n.ok, n.str());
}

void tuning() {
    Notes n;
    const TwoVehicleTuning fleet = fleet_average_tuning(std::numbers::pi / 2.0);
    double worst = 0.0;
    for (const double kappa : {0.3, fleet.kappa, 2.0}) {
        ContestedLoop loop{fleet, BarrierGains{}};
        loop.tuning.kappa = kappa;
        const MuEigenvalues mu = mu_eigenvalues(loop.tuning);
        std::vector<double> expected{-loop.gains.lambda1, -loop.gains.lambda2, mu.stable, mu.unstable};
        std::sort(expected.begin(), expected.end());
        const auto spec = linearized_spectrum(loop);
        for (std::size_t k = 0; k < 4; ++k)
            worst = std::max(worst, std::abs(spec[k] - std::complex<double>(expected[k], 0.0)));
    }
    n.check(worst <= 1e-4, "FD spectrum vs formula max error ", worst);

    const OpenInterval range = unstable_range(fleet.v0.norm(), fleet.D);
    bool inside = true;
    std::vector<double> kappas;
    for (double k = 0.01; k <= 100.0; k *= 1.5) kappas.push_back(k);
    for (const KappaRow& r : kappa_sweep(fleet.v0.norm(), fleet.D, kappas)) inside = inside && range.contains(r.unstable);
    n.check(inside, kappas.size(), "-point kappa sweep inside (0, ", range.hi, ")");

    const double mu = mu_eigenvalues(fleet).unstable;
    n.check(std::abs(mu - 1.70) <= 0.01, "kappa ", fleet.kappa, " unstable ", mu, " 1/s");
    report(7, "tuning analysis", n.ok, n.str());
}

// Densest moment of a heavy-traffic DPC-CBF run, trimmed to the 20 vehicles
// nearest the merge point.
struct DenseSnapshot {
    Snapshot snap;
    std::map<VehicleId, double> desired;
};

DenseSnapshot dense_snapshot() {
    ScenarioConfig cfg;
    cfg.vehicles_per_lane = 16;
    cfg.rate_vph = {1800.0, 2000.0};
    SimulationSettings st;
    st.gains = cfg.dpc;
    Scenario sc;
    const StepRecord* best = nullptr;
    RunLog log;
    for (std::uint64_t k = 0; k < 20 && (!best || best->vehicles.size() < 20); ++k) {
        sc = sample_scenario(cfg, k);
        log = run_scenario(sc, st);
        best = &*std::max_element(log.steps.begin(), log.steps.end(), [](const StepRecord& a, const StepRecord& b) {
            return a.vehicles.size() < b.vehicles.size();
        });
    }
    std::vector<VehicleRecord> vehicles = best->vehicles;
    std::sort(vehicles.begin(), vehicles.end(),
              [](const VehicleRecord& a, const VehicleRecord& b) { return std::abs(a.s) < std::abs(b.s); });
    vehicles.resize(std::min<std::size_t>(vehicles.size(), 20));
    DenseSnapshot out;
    out.snap.time = best->time;
    out.snap.road = sc.road;
    for (const VehicleRecord& v : vehicles) {
        const VehicleParams& p = sc.vehicle(v.id).params;
        out.snap.agents.push_back({v.id, {v.lane, v.s}, v.speed, v.accel, p.mass_kg, p.radius_m, 0.0});
        out.desired[v.id] = p.desired_speed;
    }
    return out;
}

void performance() {
    const ScenarioConfig cfg;
    const DenseSnapshot dense = dense_snapshot();
    const Snapshot& snap = dense.snap;
    QpSolver solver;
    double worst_single = 0.0, worst_fanout = 0.0;
    int infeasible = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto fan0 = Clock::now();
        for (const AgentSnapshot& host : snap.agents) {
            DisturbanceLedger ledger(host.id);
            const auto t0 = Clock::now();
            const DpcStepResult r = dpc_cbf_step(host.id, snap, dense.desired.at(host.id), ledger, cfg.dpc, solver);
            worst_single = std::max(worst_single, seconds_since(t0));
            infeasible += r.infeasible;
        }
        worst_fanout = std::max(worst_fanout, seconds_since(fan0));
    }

    // Worst host solve seen across full nominal runs as well.
    double worst_in_run = 0.0;
    for (std::uint64_t k = 0; k < 5; ++k) {
        SimulationSettings st;
        st.gains = cfg.dpc;
        st.time_qp = true;
        worst_in_run = std::max(worst_in_run, run_scenario(sample_scenario(cfg, k), st).diagnostics.max_qp_seconds);
    }
    Notes n;
    n.check(snap.agents.size() == 20 && infeasible == 0, snap.agents.size(), "-agent snapshot solved by every host");
    n.check(worst_single <= 0.012, "worst single-host solve ", worst_single * 1e3, " ms");
    n.check(worst_in_run <= 0.012, "worst in-run host solve ", worst_in_run * 1e3, " ms");
    n.check(worst_fanout <= 0.050, "worst 20-host fan-out ", worst_fanout * 1e3, " ms");
    report(8, "controller compute time", n.ok, n.str());
}

void properties(const Nominal& nb) {
    Notes n;
    int tel_below_be = 0, vehicles = 0;
    for (const auto& [kind, cs] : nb.summary.controllers)
        for (const RunResult& r : cs.runs)
            for (const VehicleEnergy& v : r.metrics.energy.vehicles) {
                ++vehicles;
                tel_below_be += v.tel_whpkm < v.be_whpkm;
            }
    n.check(tel_below_be == 0, "TEL >= BE for ", vehicles, " vehicle-runs");
    ScenarioConfig cfg;
    for (const verify::InvariantCheck& c : verify::run_invariant_suite(cfg, 20)) n.check(c.passed, c.name, ": ", c.detail);
    report(9, "property suites", n.ok, n.str());
}

}  // namespace

int main() {
    std::cout << std::setprecision(4);
    try {
        four_vehicle();
        const Nominal nb = nominal_batch();
        nominal_safety(nb);
        table_reproduction(nb);
        ccbf_closeness(nb);
        fault_campaign();
        qp_oracle();
        tuning();
        performance();
        properties(nb);
    } catch (const std::exception& e) {
        std::cout << "[FAIL] aborted: " << e.what() << std::endl;
        return 2;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
