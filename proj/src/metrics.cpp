#include "dpcmerge/metrics.hpp"

#include "dpcmerge/cbf_constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpcmerge {

namespace {

struct Accum {
    double pake_j = 0.0;
    double be_j = 0.0;
    double tel_j = 0.0;
    double rl_j = 0.0;
    double distance_m = 0.0;
};

// Same kinematics as the simulator's integrator.
double step_distance(double v, double a, double Ts) {
    if (v + a * Ts >= 0.0) return v * Ts + 0.5 * a * Ts * Ts;
    return a < 0.0 ? 0.5 * v * v / -a : 0.0;
}

}  // namespace

EnergyMetrics energy_metrics(const RunLog& log, const std::map<VehicleId, VehicleParams>& params) {
    if (log.steps.empty()) throw std::invalid_argument("energy metrics need a nonempty log");
    const double Ts = log.Ts;
    std::map<VehicleId, Accum> acc;
    for (const StepRecord& step : log.steps) {
        for (const VehicleRecord& r : step.vehicles) {
            const auto p = params.find(r.id);
            if (p == params.end())
                throw std::invalid_argument("no parameters for vehicle " + std::to_string(r.id));
            const double m = p->second.mass_kg;
            const double v = r.speed;
            const double a = r.accel;
            const double v_next = std::max(0.0, v + a * Ts);
            Accum& s = acc[r.id];
            if (a > 0.0) s.pake_j += std::max(0.0, 0.5 * m * (v_next * v_next - v * v));
            const double f_rl = road_load_force(v, p->second.coast);
            const double e_b = std::max(0.0, -(m * a + f_rl)) * v * Ts;
            const double e_rl = f_rl * v * Ts;
            s.be_j += e_b;
            s.tel_j += std::max(e_b, e_rl);
            s.rl_j += e_rl;
            s.distance_m += step_distance(v, a, Ts);
        }
    }

    EnergyMetrics out;
    for (const auto& [id, s] : acc) {
        VehicleEnergy e;
        e.id = id;
        e.distance_m = s.distance_m;
        if (s.distance_m > 0.0) {
            const double k = kWhPerKmPerJPerM / s.distance_m;
            e.pake_whpkm = s.pake_j * k;
            e.be_whpkm = s.be_j * k;
            e.tel_whpkm = s.tel_j * k;
            e.road_load_whpkm = s.rl_j * k;
        }
        out.vehicles.push_back(e);
    }
    if (!out.vehicles.empty()) {
        for (const VehicleEnergy& e : out.vehicles) {
            out.pake_whpkm += e.pake_whpkm;
            out.be_whpkm += e.be_whpkm;
            out.tel_whpkm += e.tel_whpkm;
        }
        const auto n = static_cast<double>(out.vehicles.size());
        out.pake_whpkm /= n;
        out.be_whpkm /= n;
        out.tel_whpkm /= n;
    }
    return out;
}

FlowMetrics flow_metrics(const RunLog& log) {
    FlowMetrics out;
    double speed_sum = 0.0;
    std::size_t samples = 0;
    std::map<VehicleId, bool> upstream;  // vehicles that were ever upstream of the merge point
    for (const StepRecord& step : log.steps) {
        for (const VehicleRecord& r : step.vehicles) {
            speed_sum += r.speed;
            ++samples;
            if (r.s < 0.0) upstream[r.id] = true;
        }
    }
    out.avg_speed_mps = samples > 0 ? speed_sum / static_cast<double>(samples) : 0.0;

    const RunDiagnostics& d = log.diagnostics;
    std::size_t crossed = 0;
    for (const auto& [id, _] : upstream) {
        if (std::any_of(d.merge_crossings.begin(), d.merge_crossings.end(),
                        [id = id](const CrossingEvent& c) { return c.id == id; }))
            ++crossed;
    }
    out.gridlock = d.gridlock || crossed < upstream.size();
    if (out.gridlock) {
        out.travel_time_s = std::numeric_limits<double>::infinity();
    } else {
        for (const CrossingEvent& c : d.merge_crossings) out.travel_time_s = std::max(out.travel_time_s, c.time);
    }
    return out;
}

double h0_min(const RunLog& log, const std::map<VehicleId, double>& radii, const RoadNetwork& road) {
    double best = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<Vec2, double>> pts;
    for (const StepRecord& step : log.steps) {
        pts.clear();
        for (const VehicleRecord& r : step.vehicles)
            pts.emplace_back(to_plane({r.lane, r.s}, 0.0, road).position, radii.at(r.id));
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                const double h = barrier_value(pts[i].first - pts[j].first, pts[i].second, pts[j].second, 0.0);
                if (std::isnan(best) || h < best) best = h;
            }
    }
    return best;
}

MetricsReport compute_metrics(const RunLog& log, const std::map<VehicleId, VehicleParams>& params,
                              const RoadNetwork& road) {
    MetricsReport out;
    if (!log.steps.empty()) out.energy = energy_metrics(log, params);
    out.flow = flow_metrics(log);
    std::map<VehicleId, double> radii;
    for (const auto& [id, p] : params) radii[id] = p.radius_m;
    out.h0_min_m2 = h0_min(log, radii, road);
    out.collision_steps = log.diagnostics.collision_steps;
    out.infeasible_flags = log.diagnostics.infeasible_flags;
    return out;
}

}  // namespace dpcmerge
