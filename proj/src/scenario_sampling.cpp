#include "dpcmerge/scenario_sampling.hpp"

#include "dpcmerge/rng.hpp"

#include <cstring>
#include <string>

namespace dpcmerge {

double radius_for_mass(double mass_kg, const ScenarioConfig& cfg) {
    const double span = cfg.mass_kg.hi - cfg.mass_kg.lo;
    if (span <= 0.0) return cfg.radius_m.lo;
    const double t = (mass_kg - cfg.mass_kg.lo) / span;
    return cfg.radius_m.lo + t * (cfg.radius_m.hi - cfg.radius_m.lo);
}

Scenario sample_scenario(const ScenarioConfig& cfg, std::uint64_t run_index, const CoastDownTable& table) {
    Philox4x32 rng(cfg.seed, run_index);
    Scenario sc;
    sc.road = cfg.road;
    sc.Ts = cfg.Ts;
    sc.max_time_s = cfg.max_time_s;

    const int n = cfg.vehicles_per_lane;
    for (const Lane lane : {Lane::Highway, Lane::Merge}) {
        const double rate = rng.uniform(cfg.rate_vph.lo, cfg.rate_vph.hi);
        const double headway = 3600.0 / rate;
        double t = rng.uniform(0.0, headway);
        for (int k = 0; k < n; ++k) {
            if (k > 0) t += headway * (1.0 + cfg.headway_jitter * rng.uniform(-1.0, 1.0));
            VehicleSpec v;
            v.id = static_cast<VehicleId>((lane == Lane::Highway ? 0 : n) + k + 1);
            v.label = (lane == Lane::Highway ? "H" : "M") + std::to_string(k + 1);
            v.lane = lane;
            v.arrival_time = t;
            v.initial_speed = rng.uniform(cfg.speed_mps.lo, cfg.speed_mps.hi);
            const double mass = rng.uniform(cfg.mass_kg.lo, cfg.mass_kg.hi);
            v.params = {mass, radius_for_mass(mass, cfg), table.at_mass(mass), v.initial_speed};
            sc.vehicles.push_back(std::move(v));
        }
    }

    if (cfg.fault && n > 0) {
        const bool highway = run_index < static_cast<std::uint64_t>(cfg.runs) / 2;
        const int lo = n / 3;
        const int hi = std::max(lo + 1, n - n / 3);  // exclusive
        const auto pick = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(lo),
                                                           static_cast<std::uint64_t>(hi - 1)));
        FaultSpec f;
        f.victim = static_cast<VehicleId>((highway ? 0 : n) + pick + 1);
        f.trigger_s = cfg.fault->trigger_s;
        sc.fault = f;
    }
    return sc;
}

Scenario four_vehicle_scenario(const CoastDownTable& table) {
    const ScenarioConfig defaults;
    const double mass = 4500.0 * kKgPerLb;
    const VehicleParams params{mass, radius_for_mass(mass, defaults), table.at_mass(mass), 20.0};
    Scenario sc;
    sc.road = defaults.road;
    sc.Ts = defaults.Ts;
    sc.max_time_s = 60.0;
    auto add = [&](VehicleId id, const char* label, Lane lane, double s) {
        VehicleSpec v;
        v.id = id;
        v.label = label;
        v.lane = lane;
        v.initial_s = s;
        v.initial_speed = 20.0;
        v.params = params;
        sc.vehicles.push_back(std::move(v));
    };
    add(1, "H1", Lane::Highway, -150.0);
    add(2, "H2", Lane::Highway, -190.0);
    add(3, "M1", Lane::Merge, -149.9);
    add(4, "M2", Lane::Merge, -190.1);
    return sc;
}

namespace {

struct Fnv {
    std::uint64_t h = 1469598103934665603ull;
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    }
    void num(double x) { bytes(&x, sizeof x); }
    void num(std::uint64_t x) { bytes(&x, sizeof x); }
};

}  // namespace

std::uint64_t scenario_hash(const Scenario& sc) {
    Fnv f;
    f.num(sc.road.merge_angle_rad);
    f.num(sc.road.cz_upstream_m);
    f.num(sc.road.cz_downstream_m);
    f.num(sc.Ts);
    f.num(sc.max_time_s);
    for (const VehicleSpec& v : sc.vehicles) {
        f.num(static_cast<std::uint64_t>(v.id));
        f.num(static_cast<std::uint64_t>(v.lane));
        f.num(v.arrival_time);
        f.num(v.initial_s.value_or(1e300));
        f.num(v.initial_speed);
        f.num(v.params.mass_kg);
        f.num(v.params.radius_m);
        f.num(v.params.coast.c0_n);
        f.num(v.params.coast.c1_nspm);
        f.num(v.params.coast.c2_ns2pm2);
        f.num(v.params.desired_speed);
    }
    if (sc.fault) {
        f.num(static_cast<std::uint64_t>(sc.fault->victim));
        f.num(sc.fault->trigger_s.value_or(1e300));
        f.num(sc.fault->trigger_time.value_or(1e300));
    }
    return f.h;
}

}  // namespace dpcmerge
