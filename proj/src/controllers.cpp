#include "dpcmerge/controllers.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace dpcmerge {

std::size_t Snapshot::index_of(VehicleId id) const {
    for (std::size_t k = 0; k < agents.size(); ++k)
        if (agents[k].id == id) return k;
    throw std::out_of_range("vehicle " + std::to_string(id) + " not in snapshot");
}

double default_alpha() {
    const double m_base = 2375.0 * kKgPerLb;
    return 1.7 / (2.5 * m_base);
}

void ControllerGains::validate() const {
    barrier.validate();
    if (!(tau_w > 0.0)) throw std::invalid_argument("tau_w must be positive");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
    if (!(Ts > 0.0)) throw std::invalid_argument("sampling time must be positive");
    if (!(slack_weight > 0.0)) throw std::invalid_argument("slack weight must be positive");
    if (limits.min > limits.max) throw std::invalid_argument("acceleration limits out of order");
    if (observer == DisturbanceObserver::FilteredVelocity && tau_w != barrier.tau_f)
        throw std::invalid_argument("filtered-velocity observer needs tau_w == tau_f");
}

ControllerGains ControllerGains::dpc_default() {
    ControllerGains g;
    g.alpha = default_alpha();
    return g;
}

ControllerGains ControllerGains::c_cbf_default() {
    return dpc_default();
}

ControllerGains ControllerGains::fifo_default() {
    ControllerGains g;
    g.barrier.lambda1 = 0.3;
    g.barrier.lambda2 = 2.0;
    g.slack_weight = 1e4;
    return g;
}

double DisturbanceLedger::w_hat(VehicleId j) const {
    if (j == host_) return 0.0;
    const auto it = entries_.find(j);
    return it == entries_.end() ? 0.0 : it->second.w_hat;
}

void DisturbanceLedger::observe(const Snapshot& snap, const ControllerGains& gains) {
    std::map<VehicleId, Entry> next;
    for (const AgentSnapshot& a : snap.agents) {
        if (a.id == host_) continue;
        const auto it = entries_.find(a.id);
        if (it == entries_.end()) {
            Entry fresh;
            fresh.filtered_estimate = a.speed;
            next.emplace(a.id, fresh);
            continue;
        }
        Entry e = it->second;
        if (e.has_estimate) {
            if (gains.observer == DisturbanceObserver::AccelerationBased) {
                const double implemented = e.last_speed + gains.barrier.tau_f * a.accel;
                e.w_hat += (gains.Ts / gains.tau_w) * (-e.w_hat + implemented - e.last_estimate);
            } else {
                e.filtered_estimate +=
                    (gains.Ts / gains.barrier.tau_f) * (e.last_estimate - e.filtered_estimate);
                e.w_hat = a.speed - e.filtered_estimate;
            }
        }
        next.emplace(a.id, e);
    }
    entries_ = std::move(next);
}

void DisturbanceLedger::record_estimates(const Snapshot& snap, std::span<const double> estimates) {
    for (std::size_t k = 0; k < snap.agents.size(); ++k) {
        const auto it = entries_.find(snap.agents[k].id);
        if (it == entries_.end()) continue;
        it->second.last_estimate = estimates[k];
        it->second.last_speed = snap.agents[k].speed;
        it->second.has_estimate = true;
    }
}

QpProblem build_joint_cbf_qp(const Snapshot& snap, std::span<const double> desired_speeds,
                             std::span<const double> w_hat, const ControllerGains& gains,
                             std::optional<std::size_t> boxed_only) {
    const std::size_t n = snap.agents.size();
    if (desired_speeds.size() != n || w_hat.size() != n)
        throw std::invalid_argument("desired speeds / disturbances must match the snapshot");

    QpProblem p = QpProblem::with_size(n);
    std::vector<AgentKinematics> kin;
    kin.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const AgentSnapshot& a = snap.agents[k];
        const auto ki = static_cast<Eigen::Index>(k);
        // (u - v0)^2 + alpha m (u - v)^2 = (1 + alpha m)(u - v_bar)^2 + const
        const double mass_term = gains.alpha * a.mass_kg;
        const double weight = 1.0 + mass_term;
        const double target = (desired_speeds[k] + mass_term * a.speed) / weight;
        p.hessian_diag(ki) = weight;
        p.linear_cost(ki) = -weight * target;
        if (!boxed_only || *boxed_only == k) {
            const ControlBounds box = box_rows(a.speed, gains.barrier.tau_f, gains.limits);
            p.lower(ki) = box.lower - w_hat[k];
            p.upper(ki) = box.upper - w_hat[k];
        }
        kin.push_back({a.position, a.speed, a.radius_m});
    }

    std::vector<ConstraintRow> rows = pairwise_rows(kin, snap.road, gains.barrier);
    // Pairs already in contact pass through each other; their barrier no
    // longer describes anything the controls can protect.
    std::erase_if(rows, [](const ConstraintRow& r) { return r.h0 < 0.0; });
    p.inequality_rows.setZero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    p.inequality_rhs.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const ConstraintRow& row = rows[r];
        const auto ri = static_cast<Eigen::Index>(r);
        p.inequality_rows(ri, static_cast<Eigen::Index>(row.i)) = row.coeff_i;
        p.inequality_rows(ri, static_cast<Eigen::Index>(row.j)) = row.coeff_j;
        p.inequality_rhs(ri) = -row.A - row.coeff_i * w_hat[row.i] - row.coeff_j * w_hat[row.j];
    }
    return p;
}

DpcStepResult dpc_cbf_step(VehicleId host, const Snapshot& snap, double host_desired_speed,
                           DisturbanceLedger& ledger, const ControllerGains& gains,
                           QpSolver& solver) {
    if (ledger.host() != host) throw std::invalid_argument("ledger belongs to another host");
    const std::size_t h = snap.index_of(host);
    const std::size_t n = snap.agents.size();

    ledger.observe(snap, gains);

    // Other agents' desired speeds are unknown; their current speeds stand in.
    std::vector<double> desired(n), w(n);
    for (std::size_t k = 0; k < n; ++k) {
        desired[k] = snap.agents[k].speed;
        w[k] = ledger.w_hat(snap.agents[k].id);
    }
    desired[h] = host_desired_speed;

    const QpProblem p = build_joint_cbf_qp(
        snap, desired, w, gains,
        gains.box_scope == BoxScope::HostOnly ? std::optional<std::size_t>(h) : std::nullopt);
    const QpSolution sol = solver.solve(p);

    DpcStepResult out;
    out.status = sol.status;
    out.iterations = sol.iterations;
    out.u_estimates.resize(n);
    if (sol.optimal()) {
        for (std::size_t k = 0; k < n; ++k) out.u_estimates[k] = sol.u_star(static_cast<Eigen::Index>(k));
    } else {
        out.infeasible = true;
        for (std::size_t k = 0; k < n; ++k)
            out.u_estimates[k] = box_rows(snap.agents[k].speed, gains.barrier.tau_f, gains.limits).lower;
    }
    out.u_host = out.u_estimates[h];
    ledger.record_estimates(snap, out.u_estimates);
    return out;
}

CentralStepResult c_cbf_step(const Snapshot& snap, std::span<const double> desired_speeds,
                             const ControllerGains& gains, QpSolver& solver) {
    const std::size_t n = snap.agents.size();
    const std::vector<double> zero(n, 0.0);
    const QpProblem p = build_joint_cbf_qp(snap, desired_speeds, zero, gains);
    const QpSolution sol = solver.solve(p);

    CentralStepResult out;
    out.status = sol.status;
    out.u.resize(n);
    if (sol.optimal()) {
        for (std::size_t k = 0; k < n; ++k) out.u[k] = sol.u_star(static_cast<Eigen::Index>(k));
    } else {
        out.infeasible = true;
        for (std::size_t k = 0; k < n; ++k)
            out.u[k] = box_rows(snap.agents[k].speed, gains.barrier.tau_f, gains.limits).lower;
    }
    return out;
}

FifoStepResult fifo_step(const Snapshot& snap, std::span<const double> desired_speeds,
                         const ControllerGains& gains, QpSolver& solver) {
    const std::size_t n = snap.agents.size();
    if (desired_speeds.size() != n) throw std::invalid_argument("desired speeds must match the snapshot");

    FifoStepResult out;
    out.accel.assign(n, 0.0);
    out.priority.resize(n);
    std::iota(out.priority.begin(), out.priority.end(), std::size_t{0});
    std::sort(out.priority.begin(), out.priority.end(), [&](std::size_t a, std::size_t b) {
        const AgentSnapshot& x = snap.agents[a];
        const AgentSnapshot& y = snap.agents[b];
        if (x.cz_entry_time != y.cz_entry_time) return x.cz_entry_time < y.cz_entry_time;
        return x.id < y.id;
    });

    std::vector<PlanarState> planar;
    std::vector<Vec2> dirs;
    for (const AgentSnapshot& a : snap.agents) {
        planar.push_back(to_plane(a.position, a.speed, snap.road));
        dirs.push_back(heading(a.position, snap.road));
    }

    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t i = out.priority[rank];
        const AgentSnapshot& me = snap.agents[i];
        const double baseline = std::clamp(gains.speed_gain * (desired_speeds[i] - me.speed),
                                           gains.limits.min, gains.limits.max);

        // (a - a0)^2 + M sum sigma^2  ==  1/2 (2) a^2 - 2 a0 a + M sum sigma^2 + const
        QpProblem p = QpProblem::with_size(1);
        p.hessian_diag(0) = 2.0;
        p.linear_cost(0) = -2.0 * baseline;
        p.lower(0) = gains.limits.min;
        p.upper(0) = gains.limits.max;
        p.slack_weight = gains.slack_weight;
        for (std::size_t r = 0; r < rank; ++r) {
            const std::size_t k = out.priority[r];
            const Vec2 xi = planar[i].position - planar[k].position;
            const Vec2 v_rel = planar[i].velocity - planar[k].velocity;
            if (barrier_value(xi, me.radius_m, snap.agents[k].radius_m, 0.0) < 0.0) continue;
            const double h = barrier_value(xi, me.radius_m, snap.agents[k].radius_m, gains.barrier.beta);
            const CbfRow row = double_integrator_row(xi, v_rel, h, gains.barrier);
            p.add_inequality(Eigen::Matrix<double, 1, 1>(row.B.dot(dirs[i])), -row.A);
        }
        const QpSolution sol = solver.solve(p);
        // Relaxed problems are always feasible; keep the baseline on anything odd.
        out.accel[i] = sol.optimal() ? sol.u_star(0) : baseline;
        if (sol.slack_values.size() > 0)
            out.max_slack = std::max(out.max_slack, sol.slack_values.maxCoeff());
    }
    return out;
}

}  // namespace dpcmerge
