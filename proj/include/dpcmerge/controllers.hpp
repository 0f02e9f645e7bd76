#pragma once

#include "dpcmerge/cbf_constraints.hpp"
#include "dpcmerge/geometry.hpp"
#include "dpcmerge/qp_solver.hpp"
#include "dpcmerge/vehicle.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace dpcmerge {

// What a vehicle broadcasts each step (position, speed, last acceleration, size).
struct AgentSnapshot {
    VehicleId id = 0;
    LanePosition position;
    double speed = 0.0;
    double accel = 0.0;  // acceleration applied over the previous step
    double mass_kg = 0.0;
    double radius_m = 0.0;
    double cz_entry_time = 0.0;
};

// Immutable view of every control-zone member at one instant.
struct Snapshot {
    double time = 0.0;
    RoadNetwork road;
    std::vector<AgentSnapshot> agents;

    // Index of `id` in agents; throws std::out_of_range when absent.
    std::size_t index_of(VehicleId id) const;
};

// How a host reconstructs the command another agent actually implemented.
enum class DisturbanceObserver {
    // u_j = v_j + tau_f a_j from the broadcast acceleration, then the w-hat
    // low-pass filter with tau_w.
    AccelerationBased,
    // Requires tau_w == tau_f: filter the host's own estimates with tau_f and
    // compare against the observed speed; no acceleration data needed.
    FilteredVelocity,
};

// Which acceleration limits enter a host's QP.
enum class BoxScope {
    HostOnly,   // only the host's own command is boxed
    AllAgents,  // every agent; others are boxed on their corrected command u + w-hat
};

struct ControllerGains {
    BarrierGains barrier;
    double tau_w = 0.4;        // s
    double alpha = 0.0;        // 1/kg, mass-penalty scale
    double slack_weight = 1e4; // FIFO only
    double Ts = 0.1;           // s
    double speed_gain = 0.5;   // 1/s, FIFO baseline a0 = k (v0 - v)
    AccelLimits limits;
    DisturbanceObserver observer = DisturbanceObserver::FilteredVelocity;
    BoxScope box_scope = BoxScope::AllAgents;  // DPC-CBF only

    void validate() const;

    bool operator==(const ControllerGains&) const = default;

    static ControllerGains dpc_default();
    static ControllerGains c_cbf_default();
    static ControllerGains fifo_default();
};

// alpha such that alpha * m = 1.7 at the mean mass of U(m_base, 4 m_base),
// m_base = 2375 lb.
double default_alpha();

// Per-host store of filtered disturbance estimates w-hat[j | host].
class DisturbanceLedger {
public:
    struct Entry {
        double w_hat = 0.0;
        double last_estimate = 0.0;  // u*_{j|host} from the previous step
        double last_speed = 0.0;     // v_j when that estimate was made
        double filtered_estimate = 0.0;
        bool has_estimate = false;
    };

    explicit DisturbanceLedger(VehicleId host = 0) : host_(host) {}

    VehicleId host() const { return host_; }
    // Zero for the host itself and for agents not currently tracked.
    double w_hat(VehicleId j) const;
    const std::map<VehicleId, Entry>& entries() const { return entries_; }

    // Drops agents that left the view, opens zeroed entries for new ones, and
    // applies one correction step using what each agent did since the last call.
    void observe(const Snapshot& snap, const ControllerGains& gains);

    // Remembers this step's estimates (aligned with snap.agents).
    void record_estimates(const Snapshot& snap, std::span<const double> estimates);

private:
    VehicleId host_;
    std::map<VehicleId, Entry> entries_;
};

// Assembles the joint QP shared by DPC-CBF and C-CBF over all snapshot agents:
// cost sum_k (u_k - v0_k)^2 + alpha m_k tau_f^2 ((u_k - v_k)/tau_f)^2, one
// barrier row per pair with disturbance terms w_hat (zero for the host), and
// acceleration limits on u_k + w_hat_k for every agent (or only for agent
// `boxed_only`).
QpProblem build_joint_cbf_qp(const Snapshot& snap, std::span<const double> desired_speeds,
                             std::span<const double> w_hat, const ControllerGains& gains,
                             std::optional<std::size_t> boxed_only = std::nullopt);

struct DpcStepResult {
    double u_host = 0.0;
    std::vector<double> u_estimates;  // aligned with snapshot agents
    bool infeasible = false;
    QpStatus status = QpStatus::Optimal;
    int iterations = 0;
};

// One decentralized host update: correct the ledger, solve the host's QP over
// every agent's control, fall back to maximum braking when infeasible.
DpcStepResult dpc_cbf_step(VehicleId host, const Snapshot& snap, double host_desired_speed,
                           DisturbanceLedger& ledger, const ControllerGains& gains,
                           QpSolver& solver);

struct CentralStepResult {
    std::vector<double> u;  // aligned with snapshot agents
    bool infeasible = false;
    QpStatus status = QpStatus::Optimal;
};

CentralStepResult c_cbf_step(const Snapshot& snap, std::span<const double> desired_speeds,
                             const ControllerGains& gains, QpSolver& solver);

struct FifoStepResult {
    std::vector<double> accel;         // aligned with snapshot agents
    std::vector<std::size_t> priority; // agent indices, highest priority first
    double max_slack = 0.0;
};

// Priority by CZ entry time (ties by id). Each agent tracks a proportional
// speed baseline subject to double-integrator barrier rows against every
// higher-priority agent, relaxed by M-weighted slacks.
FifoStepResult fifo_step(const Snapshot& snap, std::span<const double> desired_speeds,
                         const ControllerGains& gains, QpSolver& solver);

}  // namespace dpcmerge
