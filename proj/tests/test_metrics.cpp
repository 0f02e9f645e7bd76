#include "dpcmerge/metrics.hpp"
#include "dpcmerge/scenario_sampling.hpp"
#include "dpcmerge/verify/invariant_suite.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace dpcmerge;
using doctest::Approx;

namespace {

RunLog one_step(double v, double a, double Ts = 0.1) {
    RunLog log;
    log.Ts = Ts;
    StepRecord rec;
    VehicleRecord r;
    r.id = 1;
    r.s = -100.0;
    r.speed = v;
    r.accel = a;
    rec.vehicles.push_back(r);
    log.steps.push_back(rec);
    return log;
}

std::map<VehicleId, VehicleParams> single(double mass, CoastDown coast) {
    VehicleParams p;
    p.mass_kg = mass;
    p.coast = coast;
    return {{1, p}};
}

StepRecord pair_step(double s1, double s2) {
    StepRecord rec;
    VehicleRecord a;
    a.id = 1;
    a.s = s1;
    VehicleRecord b;
    b.id = 2;
    b.s = s2;
    rec.vehicles = {a, b};
    return rec;
}

}  // namespace

TEST_CASE("road-load force") {
    const CoastDown c{120.0, 2.0, 0.4};
    CHECK(road_load_force(0.0, c) == 120.0);
    CHECK(road_load_force(25.0, c) == Approx(420.0));
    const CoastDown twice{240.0, 4.0, 0.8};
    for (double v = 0.0; v < 30.0; v += 3.7) CHECK(road_load_force(v, twice) == Approx(2.0 * road_load_force(v, c)));
    CHECK_THROWS_AS(road_load_force(-1.0, c), std::invalid_argument);
}

TEST_CASE("constant-speed log") {
    RoadNetwork road;
    const RunLog log = verify::cruise_log(road, 1, 20.0, 0.1);
    const CoastDown c{150.0, 1.5, 0.4};
    const EnergyMetrics e = energy_metrics(log, single(1800.0, c));
    CHECK(e.pake_whpkm == 0.0);
    CHECK(e.be_whpkm == 0.0);
    // TEL per metre is exactly the road-load force.
    CHECK(e.tel_whpkm == Approx(road_load_force(20.0, c) * kWhPerKmPerJPerM));
    CHECK(e.vehicles.at(0).road_load_whpkm == Approx(e.tel_whpkm));
}

TEST_CASE("coasting at the road-load deceleration") {
    const CoastDown c{150.0, 1.5, 0.4};
    const double m = 1800.0;
    const double a = -road_load_force(22.0, c) / m;
    const EnergyMetrics e = energy_metrics(one_step(22.0, a), single(m, c));
    CHECK(e.be_whpkm == Approx(0.0).epsilon(1e-12));
    CHECK(e.tel_whpkm == Approx(e.vehicles.at(0).road_load_whpkm));
}

TEST_CASE("PaKE of one accelerating step") {
    const EnergyMetrics e = energy_metrics(one_step(20.0, 10.0), single(1500.0, {}));
    const double distance = 20.0 * 0.1 + 0.5 * 10.0 * 0.01;
    CHECK(e.vehicles.at(0).distance_m == Approx(distance));
    CHECK(e.pake_whpkm * distance / kWhPerKmPerJPerM == Approx(30750.0));
}

TEST_CASE("braking energy") {
    const CoastDown c{100.0, 0.0, 0.0};
    const EnergyMetrics e = energy_metrics(one_step(10.0, -2.0), single(1000.0, c));
    const double distance = 10.0 * 0.1 - 0.5 * 2.0 * 0.01;
    const double eb = (2000.0 - 100.0) * 10.0 * 0.1;
    CHECK(e.be_whpkm == Approx(eb / distance * kWhPerKmPerJPerM));
    CHECK(e.tel_whpkm == Approx(e.be_whpkm));
    CHECK(e.pake_whpkm == 0.0);
}

TEST_CASE("energy input errors") {
    CHECK_THROWS_AS(energy_metrics(RunLog{}, single(1000.0, {})), std::invalid_argument);
    CHECK_THROWS_AS(energy_metrics(one_step(10.0, 0.0), {}), std::invalid_argument);
}

TEST_CASE("flow metrics") {
    RunLog log = one_step(20.0, 0.0);
    log.diagnostics.merge_crossings = {{1, 9.7}, {2, 14.2}};
    FlowMetrics f = flow_metrics(log);
    CHECK(f.travel_time_s == Approx(14.2));
    CHECK(f.avg_speed_mps == Approx(20.0));
    CHECK_FALSE(f.gridlock);

    log.diagnostics.gridlock = true;
    f = flow_metrics(log);
    CHECK(std::isinf(f.travel_time_s));
    CHECK(f.gridlock);
}

TEST_CASE("h0_min") {
    RoadNetwork road;
    const std::map<VehicleId, double> radii{{1, 2.0}, {2, 3.0}};
    RunLog log;
    log.steps.push_back(pair_step(-50.0, -55.0));
    CHECK(h0_min(log, radii, road) == Approx(0.0).epsilon(1e-12));
    log.steps.push_back(pair_step(-50.0, -52.0));
    CHECK(h0_min(log, radii, road) == Approx(4.0 - 25.0));
    CHECK(std::isnan(h0_min(one_step(20.0, 0.0), {{1, 2.0}}, road)));
}

TEST_CASE("TEL is never below BE on simulated runs") {
    const ScenarioConfig cfg;
    const Scenario sc = sample_scenario(cfg, 8);
    for (const ControllerKind kind : {ControllerKind::DpcCbf, ControllerKind::Fifo}) {
        SimulationSettings st;
        st.controller = kind;
        st.gains = cfg.gains_for(kind);
        const MetricsReport m = compute_metrics(run_scenario(sc, st), sc.params_by_id(), sc.road);
        CHECK(m.energy.vehicles.size() == 20);
        for (const VehicleEnergy& v : m.energy.vehicles) {
            CHECK(v.tel_whpkm >= v.be_whpkm);
            CHECK(v.tel_whpkm >= v.road_load_whpkm - 1e-12);
        }
        CHECK(m.h0_min_m2 > 0.0);
    }
}
