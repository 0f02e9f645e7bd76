#include "dpcmerge/simulation.hpp"

#include "dpcmerge/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dpcmerge {

const char* to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::DpcCbf: return "dpc-cbf";
        case ControllerKind::CCbf: return "c-cbf";
        case ControllerKind::Fifo: return "fifo";
    }
    return "unknown";
}

ControllerKind controller_from_string(const std::string& name) {
    if (name == "dpc-cbf" || name == "dpc") return ControllerKind::DpcCbf;
    if (name == "c-cbf" || name == "ccbf") return ControllerKind::CCbf;
    if (name == "fifo") return ControllerKind::Fifo;
    throw std::invalid_argument("unknown controller '" + name + "'");
}

VehicleState integrate(const VehicleState& state, double accel, double Ts) {
    VehicleState next = state;
    next.last_accel = accel;
    const double v = state.speed;
    const double v_next = v + accel * Ts;
    if (v_next >= 0.0) {
        next.speed = v_next;
        next.position.s = state.position.s + v * Ts + 0.5 * accel * Ts * Ts;
    } else {
        // Stops inside the step: travels v^2 / (2|a|).
        next.speed = 0.0;
        next.position.s = state.position.s + (accel < 0.0 ? 0.5 * v * v / -accel : 0.0);
    }
    if (next.position.lane == Lane::Merge && next.position.s >= 0.0) next.position.lane = Lane::Highway;
    return next;
}

VehicleState plant_step(const VehicleState& state, double u, double Ts, double tau_f,
                        AccelLimits limits) {
    if (!(Ts > 0.0)) throw std::invalid_argument("Ts must be positive");
    const double a = std::clamp((u - state.speed) / tau_f, limits.min, limits.max);
    VehicleState next = integrate(state, a, Ts);
    next.last_command_u = u;
    return next;
}

VehicleState faulted_step(const VehicleState& state, const VehicleParams& params, double Ts) {
    const double a =
        state.speed > 0.0 ? -road_load_force(state.speed, params.coast) / params.mass_kg : 0.0;
    VehicleState next = integrate(state, a, Ts);
    next.last_command_u = state.speed;
    next.faulted = true;
    return next;
}

std::map<VehicleId, VehicleParams> Scenario::params_by_id() const {
    std::map<VehicleId, VehicleParams> out;
    for (const VehicleSpec& v : vehicles) out.emplace(v.id, v.params);
    return out;
}

const VehicleSpec& Scenario::vehicle(VehicleId id) const {
    for (const VehicleSpec& v : vehicles)
        if (v.id == id) return v;
    throw std::out_of_range("no vehicle " + std::to_string(id) + " in scenario");
}

void Scenario::validate() const {
    road.validate();
    if (!(Ts > 0.0)) throw std::invalid_argument("scenario Ts must be positive");
    std::vector<VehicleId> ids;
    for (const VehicleSpec& v : vehicles) {
        ids.push_back(v.id);
        if (v.initial_s && !road.in_zone(*v.initial_s))
            throw std::invalid_argument("pre-placed vehicle outside the control zone");
        if (v.initial_s && v.lane == Lane::Merge && *v.initial_s >= 0.0)
            throw std::invalid_argument("merge-lane vehicle must start upstream of the merge point");
        if (!(v.params.mass_kg > 0.0) || !(v.params.radius_m > 0.0))
            throw std::invalid_argument("vehicle mass and radius must be positive");
        if (v.initial_speed < 0.0) throw std::invalid_argument("initial speed must be nonnegative");
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw std::invalid_argument("duplicate vehicle id in scenario");
    if (fault) (void)vehicle(fault->victim);
}

namespace {

struct Active {
    VehicleState state;
    const VehicleSpec* spec;
};

double min_pair_barrier(const std::vector<Active>& world, const RoadNetwork& road, double beta) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < world.size(); ++i) {
        const Vec2 pi = to_plane(world[i].state.position, 0.0, road).position;
        for (std::size_t j = i + 1; j < world.size(); ++j) {
            const Vec2 pj = to_plane(world[j].state.position, 0.0, road).position;
            const double h = barrier_value(pi - pj, world[i].spec->params.radius_m,
                                           world[j].spec->params.radius_m, beta);
            if (std::isnan(best) || h < best) best = h;
        }
    }
    return best;
}

}  // namespace

RunLog run_scenario(const Scenario& scenario, const SimulationSettings& settings) {
    scenario.validate();
    const ControllerGains& gains = settings.gains;
    gains.validate();
    const RoadNetwork& road = scenario.road;
    const double Ts = gains.Ts;

    RunLog log;
    log.Ts = Ts;
    RunDiagnostics& diag = log.diagnostics;

    // Pending arrivals per lane, by arrival time then id.
    std::vector<const VehicleSpec*> order;
    for (const VehicleSpec& v : scenario.vehicles) order.push_back(&v);
    std::stable_sort(order.begin(), order.end(), [](const VehicleSpec* a, const VehicleSpec* b) {
        if (a->arrival_time != b->arrival_time) return a->arrival_time < b->arrival_time;
        return a->id < b->id;
    });
    std::deque<const VehicleSpec*> pending[2];
    std::vector<const VehicleSpec*> preplaced;
    for (const VehicleSpec* v : order) {
        if (v->initial_s)
            preplaced.push_back(v);
        else
            pending[static_cast<int>(v->lane)].push_back(v);
    }

    std::vector<Active> world;
    std::optional<VehicleId> last_injected[2];
    std::map<VehicleId, DisturbanceLedger> ledgers;
    QpSolver solver;

    auto enter = [&](const VehicleSpec* spec, double s, double entry_time) {
        VehicleState st;
        st.id = spec->id;
        st.position = {s < 0.0 ? spec->lane : Lane::Highway, s};
        st.speed = spec->initial_speed;
        st.last_command_u = st.speed;
        st.cz_entry_time = entry_time;
        world.push_back({st, spec});
        last_injected[static_cast<int>(spec->lane)] = spec->id;
        diag.entry_order.push_back(spec->id);
        ++diag.injected;
    };

    // Pre-placed vehicles: entry time extrapolated back to the CZ entrance.
    {
        std::vector<const VehicleSpec*> sorted = preplaced;
        std::stable_sort(sorted.begin(), sorted.end(), [](const VehicleSpec* a, const VehicleSpec* b) {
            return *a->initial_s > *b->initial_s;
        });
        for (const VehicleSpec* v : sorted) {
            const double back = (*v->initial_s + road.cz_upstream_m) / std::max(v->initial_speed, 1e-9);
            enter(v, *v->initial_s, -back);
        }
    }

    // Entrance gate: the newcomer must not start inside the barrier of the
    // last vehicle that entered its lane. Independent of controller gains
    // other than beta, so paired runs see the same arrivals.
    auto gate_open = [&](const VehicleSpec* spec) {
        const auto& last = last_injected[static_cast<int>(spec->lane)];
        if (!last) return true;
        const auto it = std::find_if(world.begin(), world.end(),
                                     [&](const Active& a) { return a.state.id == *last; });
        if (it == world.end()) return true;
        const LanePosition entrance{spec->lane, -road.cz_upstream_m};
        const PairSeparation sep =
            pair_separation(it->state.position, entrance, it->state.speed, spec->initial_speed, road);
        const double h = barrier_value(sep.xi, it->spec->params.radius_m, spec->params.radius_m,
                                       gains.barrier.beta);
        return h >= 0.0;
    };

    const double eps = 1e-9;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * Ts;

        for (auto& lane_queue : pending) {
            while (!lane_queue.empty() && lane_queue.front()->arrival_time <= t + eps &&
                   gate_open(lane_queue.front())) {
                enter(lane_queue.front(), -road.cz_upstream_m, t);
                lane_queue.pop_front();
            }
        }

        if (world.empty() && pending[0].empty() && pending[1].empty()) {
            diag.end_time = t;
            break;
        }
        if (t > scenario.max_time_s) {
            diag.gridlock = true;
            diag.end_time = t;
            break;
        }

        if (scenario.fault) {
            for (Active& a : world) {
                if (a.state.id != scenario.fault->victim || a.state.faulted) continue;
                const FaultSpec& f = *scenario.fault;
                if ((f.trigger_s && a.state.position.s >= *f.trigger_s) ||
                    (f.trigger_time && t >= *f.trigger_time))
                    a.state.faulted = true;
            }
        }

        Snapshot snap;
        snap.time = t;
        snap.road = road;
        snap.agents.reserve(world.size());
        for (const Active& a : world) {
            snap.agents.push_back({a.state.id, a.state.position, a.state.speed, a.state.last_accel,
                                   a.spec->params.mass_kg, a.spec->params.radius_m,
                                   a.state.cz_entry_time});
        }
        const std::size_t n = world.size();
        std::vector<double> desired(n);
        for (std::size_t i = 0; i < n; ++i) desired[i] = world[i].spec->params.desired_speed;

        StepRecord rec;
        rec.time = t;
        rec.h0_min = min_pair_barrier(world, road, 0.0);
        if (!std::isnan(rec.h0_min) && rec.h0_min < 0.0) ++diag.collision_steps;

        // Commands: velocity commands u, or accelerations for FIFO.
        std::vector<double> u(n, 0.0);
        std::vector<double> accel_cmd(n, 0.0);
        switch (settings.controller) {
            case ControllerKind::DpcCbf: {
                for (auto it = ledgers.begin(); it != ledgers.end();) {
                    const bool present = std::any_of(world.begin(), world.end(), [&](const Active& a) {
                        return a.state.id == it->first && !a.state.faulted;
                    });
                    it = present ? std::next(it) : ledgers.erase(it);
                }
                std::vector<std::size_t> hosts(n);
                std::iota(hosts.begin(), hosts.end(), std::size_t{0});
                if (settings.host_order_shuffle_seed) {
                    Philox4x32 rng(*settings.host_order_shuffle_seed, k);
                    for (std::size_t i = n; i > 1; --i)
                        std::swap(hosts[i - 1], hosts[rng.uniform_int(0, i - 1)]);
                }
                for (const std::size_t i : hosts) {
                    if (world[i].state.faulted) continue;
                    const VehicleId id = world[i].state.id;
                    auto [it, inserted] = ledgers.try_emplace(id, DisturbanceLedger(id));
                    (void)inserted;
                    const auto start = std::chrono::steady_clock::now();
                    const DpcStepResult r =
                        dpc_cbf_step(id, snap, desired[i], it->second, gains, solver);
                    if (settings.time_qp) {
                        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
                        diag.max_qp_seconds = std::max(diag.max_qp_seconds, dt.count());
                    }
                    if (r.infeasible) ++diag.infeasible_flags;
                    u[i] = r.u_host;
                }
                rec.w_hat_self.reserve(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto it = ledgers.find(world[i].state.id);
                    if (it != ledgers.end()) rec.w_hat_self.push_back(it->second.w_hat(it->first));
                }
                break;
            }
            case ControllerKind::CCbf: {
                if (n > 0) {
                    const CentralStepResult r = c_cbf_step(snap, desired, gains, solver);
                    if (r.infeasible) ++diag.infeasible_flags;
                    u = r.u;
                }
                break;
            }
            case ControllerKind::Fifo: {
                const FifoStepResult r = fifo_step(snap, desired, gains, solver);
                accel_cmd = r.accel;
                for (std::size_t i = 0; i < n; ++i)
                    u[i] = world[i].state.speed + gains.barrier.tau_f * accel_cmd[i];
                break;
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            Active& a = world[i];
            const VehicleState before = a.state;
            VehicleState next;
            if (before.faulted)
                next = faulted_step(before, a.spec->params, Ts);
            else if (settings.controller == ControllerKind::Fifo)
                next = integrate(before, std::clamp(accel_cmd[i], gains.limits.min, gains.limits.max), Ts),
                next.last_command_u = u[i];
            else
                next = plant_step(before, u[i], Ts, gains.barrier.tau_f, gains.limits);
            rec.vehicles.push_back({before.id, before.position.lane, before.position.s, before.speed,
                                    next.last_command_u, next.last_accel, before.faulted});
            if (before.position.s < 0.0 && next.position.s >= 0.0) {
                const double frac = -before.position.s / (next.position.s - before.position.s);
                diag.merge_crossings.push_back({before.id, t + frac * Ts});
            }
            a.state = next;
        }
        log.steps.push_back(std::move(rec));

        for (auto it = world.begin(); it != world.end();) {
            if (it->state.position.s > road.cz_downstream_m) {
                diag.exit_order.push_back(it->state.id);
                ++diag.exited;
                ledgers.erase(it->state.id);
                it = world.erase(it);
            } else {
                ++it;
            }
        }
    }
    return log;
}

}  // namespace dpcmerge
