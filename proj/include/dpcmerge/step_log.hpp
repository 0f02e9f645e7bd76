#pragma once

#include "dpcmerge/geometry.hpp"
#include "dpcmerge/vehicle.hpp"

#include <iosfwd>
#include <vector>

namespace dpcmerge {

// State at the start of a step plus the command and acceleration applied over it.
struct VehicleRecord {
    VehicleId id = 0;
    Lane lane = Lane::Highway;
    double s = 0.0;
    double speed = 0.0;
    double u = 0.0;
    double accel = 0.0;
    bool faulted = false;

    bool operator==(const VehicleRecord&) const = default;
};

struct StepRecord {
    double time = 0.0;
    std::vector<VehicleRecord> vehicles;
    double h0_min = 0.0;  // min beta = 0 barrier over CZ pairs; NaN with < 2 vehicles
    std::vector<double> w_hat_self;  // DPC-CBF only: each host's w-hat[i|i]

    bool operator==(const StepRecord& other) const;
};

struct CrossingEvent {
    VehicleId id = 0;
    double time = 0.0;

    bool operator==(const CrossingEvent&) const = default;
};

struct RunDiagnostics {
    int infeasible_flags = 0;   // QP infeasibility fallbacks (hard-constrained controllers)
    int collision_steps = 0;    // steps with a negative beta = 0 barrier value
    bool gridlock = false;      // time cap reached before every vehicle exited
    int injected = 0;
    int exited = 0;
    double end_time = 0.0;
    double max_qp_seconds = 0.0;
    std::vector<CrossingEvent> merge_crossings;  // s crosses 0, in order
    std::vector<VehicleId> exit_order;           // CZ exit order
    std::vector<VehicleId> entry_order;          // CZ entry order

    bool operator==(const RunDiagnostics& other) const;
};

struct RunLog {
    double Ts = 0.1;
    std::vector<StepRecord> steps;
    RunDiagnostics diagnostics;

    bool operator==(const RunLog&) const = default;
};

// One row per (step, vehicle):
// time_s,id,lane,s_m,speed_mps,u_mps,accel_mps2,faulted,h0_min_m2
void write_step_log_csv(std::ostream& out, const RunLog& log);

}  // namespace dpcmerge
