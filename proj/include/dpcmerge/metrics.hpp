#pragma once

#include "dpcmerge/geometry.hpp"
#include "dpcmerge/step_log.hpp"
#include "dpcmerge/vehicle.hpp"

#include <map>
#include <vector>

namespace dpcmerge {

// J/m to Wh/km.
inline constexpr double kWhPerKmPerJPerM = 1000.0 / 3600.0;

struct VehicleEnergy {
    VehicleId id = 0;
    double pake_whpkm = 0.0;
    double be_whpkm = 0.0;
    double tel_whpkm = 0.0;
    double road_load_whpkm = 0.0;  // pure road-load loss, the floor under TEL
    double distance_m = 0.0;
};

struct EnergyMetrics {
    std::vector<VehicleEnergy> vehicles;  // by id
    double pake_whpkm = 0.0;              // means over vehicles
    double be_whpkm = 0.0;
    double tel_whpkm = 0.0;
};

// Per step k: dKE = m (v_{k+1}^2 - v_k^2) / 2 counted toward PaKE when a_k > 0;
// F = m a_k + F_rl(v_k); E_b = max(0, -F) v_k Ts; E_rl = F_rl(v_k) v_k Ts;
// TEL += max(E_b, E_rl); BE += E_b. Totals are divided by distance travelled.
// Throws std::invalid_argument for an empty log or a vehicle without params.
EnergyMetrics energy_metrics(const RunLog& log, const std::map<VehicleId, VehicleParams>& params);

struct FlowMetrics {
    double travel_time_s = 0.0;  // last merge-point crossing; +inf under gridlock
    double avg_speed_mps = 0.0;  // mean over vehicles and CZ-resident steps
    bool gridlock = false;
};

FlowMetrics flow_metrics(const RunLog& log);

// Minimum over steps and vehicle pairs of |xi|^2 - (r_i + r_j)^2, recomputed
// from logged positions. NaN when no step holds two vehicles.
double h0_min(const RunLog& log, const std::map<VehicleId, double>& radii, const RoadNetwork& road);

struct MetricsReport {
    EnergyMetrics energy;
    FlowMetrics flow;
    double h0_min_m2 = 0.0;
    int collision_steps = 0;
    int infeasible_flags = 0;

    bool collided() const { return collision_steps > 0; }
};

MetricsReport compute_metrics(const RunLog& log, const std::map<VehicleId, VehicleParams>& params,
                              const RoadNetwork& road);

}  // namespace dpcmerge
