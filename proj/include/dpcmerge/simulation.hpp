#pragma once

#include "dpcmerge/controllers.hpp"
#include "dpcmerge/step_log.hpp"
#include "dpcmerge/vehicle.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dpcmerge {

enum class ControllerKind { DpcCbf, CCbf, Fifo };

const char* to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string& name);

struct VehicleState {
    VehicleId id = 0;
    LanePosition position;
    double speed = 0.0;         // >= 0
    double last_command_u = 0.0;
    double last_accel = 0.0;
    bool faulted = false;
    double cz_entry_time = 0.0;

    bool operator==(const VehicleState&) const = default;
};

// Double-integrator plant driven by a velocity command through the filter
// a = clamp((u - v) / tau_f, limits). Speed is clamped at zero.
VehicleState plant_step(const VehicleState& state, double u, double Ts, double tau_f,
                        AccelLimits limits = {});

// Power-loss vehicle: decelerates at road-load rate, ignores any command.
VehicleState faulted_step(const VehicleState& state, const VehicleParams& params, double Ts);

// Explicit Euler on speed, exact position for constant acceleration over the
// step; a vehicle that reaches zero speed mid-step stops there.
VehicleState integrate(const VehicleState& state, double accel, double Ts);

struct VehicleSpec {
    VehicleId id = 0;
    std::string label;
    Lane lane = Lane::Highway;
    double arrival_time = 0.0;       // s; enters at the CZ entrance
    std::optional<double> initial_s; // pre-placed inside the CZ at t = 0 instead
    double initial_speed = 20.0;
    VehicleParams params;

    bool operator==(const VehicleSpec&) const = default;
};

struct FaultSpec {
    VehicleId victim = 0;
    std::optional<double> trigger_time;
    std::optional<double> trigger_s;

    bool operator==(const FaultSpec&) const = default;
};

struct Scenario {
    RoadNetwork road;
    std::vector<VehicleSpec> vehicles;
    std::optional<FaultSpec> fault;
    double Ts = 0.1;
    double max_time_s = 400.0;

    std::map<VehicleId, VehicleParams> params_by_id() const;
    const VehicleSpec& vehicle(VehicleId id) const;
    void validate() const;

    bool operator==(const Scenario&) const = default;
};

struct SimulationSettings {
    ControllerKind controller = ControllerKind::DpcCbf;
    ControllerGains gains = ControllerGains::dpc_default();
    // Evaluate decentralized hosts in a shuffled order (outcomes must not change).
    std::optional<std::uint64_t> host_order_shuffle_seed;
    bool time_qp = false;  // record worst host solve time in diagnostics
};

// Steps the closed loop at gains.Ts until every vehicle has left the control
// zone (or the time cap is hit, flagged as gridlock). Collisions are logged
// and the run continues.
RunLog run_scenario(const Scenario& scenario, const SimulationSettings& settings);

}  // namespace dpcmerge
