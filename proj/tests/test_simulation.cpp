#include "dpcmerge/config.hpp"
#include "dpcmerge/metrics.hpp"
#include "dpcmerge/scenario_sampling.hpp"
#include "dpcmerge/simulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

using namespace dpcmerge;
using doctest::Approx;

namespace {

RunLog run(const Scenario& sc, ControllerKind kind, ControllerGains gains) {
    SimulationSettings st;
    st.controller = kind;
    st.gains = gains;
    return run_scenario(sc, st);
}

RunLog run(const Scenario& sc, ControllerKind kind) {
    const ScenarioConfig defaults;
    return run(sc, kind, defaults.gains_for(kind));
}

std::string merge_order(const Scenario& sc, const RunLog& log) {
    std::string out;
    for (const CrossingEvent& c : log.diagnostics.merge_crossings)
        out += (out.empty() ? "" : "-") + sc.vehicle(c.id).label;
    return out;
}

VehicleState cruising(double v) {
    VehicleState s;
    s.id = 1;
    s.position = {Lane::Highway, -100.0};
    s.speed = v;
    return s;
}

}  // namespace

TEST_CASE("plant step") {
    SUBCASE("filter equilibrium") {
        const VehicleState n = plant_step(cruising(20.0), 20.0, 0.1, 0.4);
        CHECK(n.last_accel == 0.0);
        CHECK(n.speed == Approx(20.0));
        CHECK(n.position.s == Approx(-98.0));
    }
    SUBCASE("acceleration at the upper limit") {
        const VehicleState n = plant_step(cruising(20.0), 22.0, 0.1, 0.4);
        CHECK(n.last_accel == Approx(5.0));
        CHECK(n.speed == Approx(20.5));
    }
    SUBCASE("command beyond the limit is clamped") {
        const VehicleState n = plant_step(cruising(20.0), 30.0, 0.1, 0.4);
        CHECK(n.last_accel == Approx(5.0));
        CHECK(n.last_command_u == 30.0);
    }
    SUBCASE("slow vehicle braking") {
        const VehicleState n = plant_step(cruising(0.1), 0.0, 0.1, 0.4);
        CHECK(n.last_accel == Approx(-0.25));
        CHECK(n.speed == Approx(0.075));
    }
}

TEST_CASE("integration stops a vehicle mid-step") {
    const VehicleState n = integrate(cruising(0.2), -6.0, 0.1);
    CHECK(n.speed == 0.0);
    CHECK(n.position.s == Approx(-100.0 + 0.2 * 0.2 / 12.0));
}

TEST_CASE("faulted vehicle") {
    VehicleParams p;
    p.mass_kg = 1500.0;
    p.coast = {120.0, 2.0, 0.4};
    SUBCASE("road-load deceleration") {
        const VehicleState n = faulted_step(cruising(25.0), p, 0.1);
        CHECK(n.last_accel == Approx(-0.28));
        CHECK(n.speed == Approx(25.0 - 0.028));
    }
    SUBCASE("standstill is absorbing") {
        const VehicleState n = faulted_step(cruising(0.0), p, 0.1);
        CHECK(n.speed == 0.0);
        CHECK(n.position.s == -100.0);
    }
}

TEST_CASE("road-load deceleration stays below the braking limit for every table row") {
    const CoastDownTable table = CoastDownTable::load_csv(std::string(DPCMERGE_DATA_DIR) + "/coastdown.csv");
    CHECK(table.rows() == CoastDownTable::builtin().rows());
    for (const auto& row : table.rows())
        for (double v = 0.0; v <= 25.0; v += 0.5) CHECK(road_load_force(v, row.coast) / row.mass_kg < 6.0);
}

TEST_CASE("controller names") {
    CHECK(controller_from_string("dpc-cbf") == ControllerKind::DpcCbf);
    CHECK(controller_from_string("c-cbf") == ControllerKind::CCbf);
    CHECK(controller_from_string("fifo") == ControllerKind::Fifo);
    CHECK(controller_from_string(to_string(ControllerKind::CCbf)) == ControllerKind::CCbf);
    CHECK_THROWS_AS(controller_from_string("mpc"), std::invalid_argument);
}

TEST_CASE("empty scenario terminates immediately") {
    const RunLog log = run(Scenario{}, ControllerKind::DpcCbf);
    CHECK(log.steps.empty());
    CHECK_FALSE(log.diagnostics.gridlock);
}

TEST_CASE("scenario validation") {
    Scenario sc = four_vehicle_scenario();
    sc.vehicles[1].id = sc.vehicles[0].id;
    CHECK_THROWS(run(sc, ControllerKind::Fifo));
    sc = four_vehicle_scenario();
    sc.vehicles[2].initial_s = 10.0;  // merge lane downstream of the merge point
    CHECK_THROWS(run(sc, ControllerKind::Fifo));
}

TEST_CASE("single vehicle crosses at distance over speed") {
    Scenario sc;
    VehicleSpec v;
    v.id = 1;
    v.label = "H1";
    v.initial_s = -200.0;
    v.initial_speed = 20.0;
    v.params.desired_speed = 20.0;
    v.params.coast = {140.0, 1.2, 0.42};
    sc.vehicles.push_back(v);
    for (const ControllerKind kind : {ControllerKind::DpcCbf, ControllerKind::CCbf, ControllerKind::Fifo}) {
        const RunLog log = run(sc, kind);
        const FlowMetrics f = flow_metrics(log);
        CHECK(f.travel_time_s == Approx(10.0));
        CHECK(f.avg_speed_mps == Approx(20.0));
        const EnergyMetrics e = energy_metrics(log, sc.params_by_id());
        CHECK(e.pake_whpkm == 0.0);
        CHECK(e.be_whpkm == 0.0);
        CHECK(e.tel_whpkm > 0.0);
    }
}

TEST_CASE("four-vehicle scenario") {
    const Scenario sc = four_vehicle_scenario();
    const RunLog dpc = run(sc, ControllerKind::DpcCbf);
    CHECK(merge_order(sc, dpc) == "M1-H1-M2-H2");
    double vmin = 1e9;
    for (const StepRecord& s : dpc.steps)
        for (const VehicleRecord& v : s.vehicles) vmin = std::min(vmin, v.speed);
    CHECK(vmin >= 5.0);
    CHECK(dpc.diagnostics.collision_steps == 0);
    CHECK(dpc.diagnostics.infeasible_flags == 0);

    const RunLog fifo = run(sc, ControllerKind::Fifo);
    CHECK(merge_order(sc, fifo) == "M1-H1-H2-M2");
}

TEST_CASE("nominal 20-vehicle run") {
    const ScenarioConfig cfg;
    const Scenario sc = sample_scenario(cfg, 3);
    CHECK(sc.vehicles.size() == 20);
    const RunLog log = run(sc, ControllerKind::DpcCbf);
    CHECK(log.diagnostics.collision_steps == 0);
    CHECK(log.diagnostics.infeasible_flags == 0);
    CHECK_FALSE(log.diagnostics.gridlock);
    CHECK(log.diagnostics.injected == 20);
    CHECK(log.diagnostics.exited == 20);
    CHECK(log.diagnostics.merge_crossings.size() == 20);
    for (const StepRecord& s : log.steps)
        for (const double w : s.w_hat_self) CHECK(w == 0.0);
}

TEST_CASE("replays are bit-identical") {
    const ScenarioConfig cfg;
    const Scenario sc = sample_scenario(cfg, 11);
    for (const ControllerKind kind : {ControllerKind::DpcCbf, ControllerKind::CCbf, ControllerKind::Fifo})
        CHECK(run(sc, kind) == run(sc, kind));
}

TEST_CASE("host evaluation order does not change the outcome") {
    const ScenarioConfig cfg;
    const Scenario sc = sample_scenario(cfg, 5);
    SimulationSettings st;
    st.gains = cfg.dpc;
    const RunLog base = run_scenario(sc, st);
    for (const std::uint64_t seed : {1u, 99u}) {
        st.host_order_shuffle_seed = seed;
        CHECK(run_scenario(sc, st) == base);
    }
}

TEST_CASE("observer forms agree when the plant never saturates") {
    Scenario sc;
    auto add = [&](VehicleId id, Lane lane, double s, double v) {
        VehicleSpec spec;
        spec.id = id;
        spec.label = std::to_string(id);
        spec.lane = lane;
        spec.initial_s = s;
        spec.initial_speed = v;
        spec.params = {2000.0, 2.5, {150.0, 1.0, 0.45}, v + 1.0};
        sc.vehicles.push_back(spec);
    };
    add(1, Lane::Highway, -120.0, 21.0);
    add(2, Lane::Merge, -118.0, 21.0);
    add(3, Lane::Highway, -190.0, 22.0);
    ControllerGains acc = ControllerGains::dpc_default();
    acc.observer = DisturbanceObserver::AccelerationBased;
    ControllerGains vel = acc;
    vel.observer = DisturbanceObserver::FilteredVelocity;
    const RunLog a = run(sc, ControllerKind::DpcCbf, acc);
    const RunLog b = run(sc, ControllerKind::DpcCbf, vel);
    REQUIRE(a.steps.size() == b.steps.size());
    double worst = 0.0;
    bool saturated = false;
    for (std::size_t k = 0; k < a.steps.size(); ++k)
        for (std::size_t i = 0; i < a.steps[k].vehicles.size(); ++i) {
            worst = std::max(worst, std::abs(a.steps[k].vehicles[i].u - b.steps[k].vehicles[i].u));
            const double acc_i = a.steps[k].vehicles[i].accel;
            saturated = saturated || acc_i >= 5.0 || acc_i <= -6.0;
        }
    REQUIRE_FALSE(saturated);
    CHECK(worst < 1e-9);
}

TEST_CASE("faulted victim ignores its controller") {
    ScenarioConfig cfg;
    cfg.fault = FaultCampaign{};
    cfg.runs = 2;
    const Scenario sc = sample_scenario(cfg, 0);
    REQUIRE(sc.fault);
    const VehicleId victim = sc.fault->victim;
    CHECK(sc.vehicle(victim).lane == Lane::Highway);
    const RunLog log = run(sc, ControllerKind::DpcCbf);
    bool seen = false;
    for (const StepRecord& s : log.steps)
        for (const VehicleRecord& v : s.vehicles)
            if (v.id == victim && v.faulted) {
                seen = true;
                CHECK(v.s >= -150.0 - 3.0);
                CHECK(v.accel < 0.0);
                CHECK(v.accel > -1.0);
            }
    CHECK(seen);
}
