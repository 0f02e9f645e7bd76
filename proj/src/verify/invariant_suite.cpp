#include "dpcmerge/verify/invariant_suite.hpp"

#include "dpcmerge/metrics.hpp"
#include "dpcmerge/scenario_sampling.hpp"
#include "dpcmerge/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpcmerge::verify {

double max_abs_w_hat_self(const RunLog& log) {
    double worst = 0.0;
    for (const StepRecord& s : log.steps)
        for (const double w : s.w_hat_self) worst = std::max(worst, std::abs(w));
    return worst;
}

RunLog cruise_log(const RoadNetwork& road, int vehicles, double speed, double Ts) {
    RunLog log;
    log.Ts = Ts;
    const double length = road.cz_upstream_m + road.cz_downstream_m;
    const auto steps = static_cast<int>(std::ceil(length / (speed * Ts)));
    for (int k = 0; k < steps; ++k) {
        StepRecord rec;
        rec.time = k * Ts;
        rec.h0_min = std::numeric_limits<double>::quiet_NaN();
        for (int i = 0; i < vehicles; ++i) {
            VehicleRecord v;
            v.id = static_cast<VehicleId>(i + 1);
            v.lane = i % 2 == 0 ? Lane::Highway : Lane::Merge;
            v.s = -road.cz_upstream_m + k * speed * Ts;
            v.speed = speed;
            v.u = speed;
            rec.vehicles.push_back(v);
        }
        log.steps.push_back(std::move(rec));
    }
    log.diagnostics.end_time = steps * Ts;
    return log;
}

std::vector<InvariantCheck> run_invariant_suite(const ScenarioConfig& cfg, int runs) {
    const ControllerKind kinds[] = {ControllerKind::DpcCbf, ControllerKind::CCbf, ControllerKind::Fifo};
    double worst_w_self = 0.0;
    int tel_violations = 0, vehicles_checked = 0, replay_mismatches = 0, order_mismatches = 0;

    for (int k = 0; k < runs; ++k) {
        const Scenario sc = sample_scenario(cfg, static_cast<std::uint64_t>(k));
        const auto params = sc.params_by_id();
        for (const ControllerKind kind : kinds) {
            SimulationSettings settings;
            settings.controller = kind;
            settings.gains = cfg.gains_for(kind);
            const RunLog log = run_scenario(sc, settings);
            if (kind == ControllerKind::DpcCbf) {
                worst_w_self = std::max(worst_w_self, max_abs_w_hat_self(log));
                SimulationSettings shuffled = settings;
                shuffled.host_order_shuffle_seed = 0x5eed0000u + static_cast<std::uint64_t>(k);
                if (!(run_scenario(sc, shuffled) == log)) ++order_mismatches;
            }
            for (const VehicleEnergy& v : energy_metrics(log, params).vehicles) {
                ++vehicles_checked;
                if (v.tel_whpkm < v.be_whpkm) ++tel_violations;
            }
            if (k < 3 && !(run_scenario(sc, settings) == log)) ++replay_mismatches;
        }
    }

    std::map<VehicleId, VehicleParams> cruise_params;
    const RunLog cruise = cruise_log(cfg.road, 4, 22.0, cfg.Ts);
    const CoastDownTable& table = CoastDownTable::builtin();
    for (VehicleId id = 1; id <= 4; ++id) {
        const double m = cfg.mass_kg.lo + (id - 1) * (cfg.mass_kg.hi - cfg.mass_kg.lo) / 3.0;
        cruise_params[id] = {m, radius_for_mass(m, cfg), table.at_mass(m), 22.0};
    }
    const EnergyMetrics cruise_energy = energy_metrics(cruise, cruise_params);
    double worst_pake = 0.0;
    for (const VehicleEnergy& v : cruise_energy.vehicles) worst_pake = std::max(worst_pake, std::abs(v.pake_whpkm));

    auto fmt = [](auto... parts) {
        std::ostringstream os;
        (os << ... << parts);
        return os.str();
    };
    return {
        {"w_hat_self_zero", worst_w_self == 0.0, fmt("max |w_hat[i|i]| = ", worst_w_self)},
        {"tel_ge_be", tel_violations == 0, fmt(tel_violations, " of ", vehicles_checked, " vehicles with TEL < BE")},
        {"pake_zero_cruise", worst_pake == 0.0, fmt("max PaKE = ", worst_pake, " Wh/km")},
        {"replay_determinism", replay_mismatches == 0, fmt(replay_mismatches, " replay mismatches")},
        {"host_order_independence", order_mismatches == 0, fmt(order_mismatches, " shuffled-order mismatches")},
    };
}

}  // namespace dpcmerge::verify
