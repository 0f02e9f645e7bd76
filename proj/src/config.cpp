#include "dpcmerge/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace dpcmerge {

const ControllerGains& ScenarioConfig::gains_for(ControllerKind kind) const {
    switch (kind) {
        case ControllerKind::DpcCbf: return dpc;
        case ControllerKind::CCbf: return ccbf;
        case ControllerKind::Fifo: return fifo;
    }
    return dpc;
}

void ScenarioConfig::validate() const {
    auto ordered = [](const Range& r, const char* what) {
        if (!(r.lo <= r.hi)) throw ConfigError(std::string(what) + " bounds out of order");
    };
    ordered(speed_mps, "speed");
    ordered(rate_vph, "rate");
    ordered(mass_kg, "mass");
    ordered(radius_m, "radius");
    if (speed_mps.lo < 0.0) throw ConfigError("speeds must be nonnegative");
    if (!(rate_vph.lo > 0.0)) throw ConfigError("injection rate must be positive");
    if (!(mass_kg.lo > 0.0) || !(radius_m.lo > 0.0)) throw ConfigError("mass and radius must be positive");
    if (vehicles_per_lane < 0) throw ConfigError("vehicles_per_lane must be nonnegative");
    if (!(headway_jitter >= 0.0 && headway_jitter < 1.0)) throw ConfigError("headway_jitter must be in [0, 1)");
    if (!(Ts > 0.0)) throw ConfigError("Ts must be positive");
    if (!(max_time_s > 0.0)) throw ConfigError("max_time_s must be positive");
    if (runs < 1) throw ConfigError("runs must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    try {
        road.validate();
        for (const ControllerGains* g : {&dpc, &ccbf, &fifo}) {
            g->validate();
            if (g->Ts != Ts) throw ConfigError("controller Ts must equal the scenario Ts");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (fault && !road.in_zone(fault->trigger_s)) throw ConfigError("fault trigger outside the control zone");
}

namespace {

std::string fmt(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& key) {
    double x = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, x);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError("bad number for '" + key + "': " + text);
    return x;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
    std::uint64_t x = 0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, x);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError("bad integer for '" + key + "': " + text);
    return x;
}

int parse_int(const std::string& text, const std::string& key) {
    int x = 0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, x);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError("bad integer for '" + key + "': " + text);
    return x;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const char* observer_name(DisturbanceObserver o) {
    return o == DisturbanceObserver::AccelerationBased ? "acceleration" : "filtered-velocity";
}

const char* scope_name(BoxScope s) { return s == BoxScope::HostOnly ? "host" : "all"; }

using Setter = std::function<void(const std::string&)>;

void gains_keys(std::map<std::string, Setter>& keys, const std::string& section, ControllerGains& g) {
    auto num = [&](const char* name, double& field) {
        const std::string key = section + "." + name;
        keys[key] = [&field, key](const std::string& v) { field = parse_double(v, key); };
    };
    num("lambda1", g.barrier.lambda1);
    num("lambda2", g.barrier.lambda2);
    num("beta", g.barrier.beta);
    num("tau_f", g.barrier.tau_f);
    num("tau_w", g.tau_w);
    num("alpha", g.alpha);
    num("slack_weight", g.slack_weight);
    num("speed_gain", g.speed_gain);
    num("accel_min", g.limits.min);
    num("accel_max", g.limits.max);
    keys[section + ".observer"] = [&g](const std::string& v) {
        if (v == "acceleration")
            g.observer = DisturbanceObserver::AccelerationBased;
        else if (v == "filtered-velocity")
            g.observer = DisturbanceObserver::FilteredVelocity;
        else
            throw ConfigError("unknown observer '" + v + "'");
    };
    keys[section + ".box_scope"] = [&g](const std::string& v) {
        if (v == "host")
            g.box_scope = BoxScope::HostOnly;
        else if (v == "all")
            g.box_scope = BoxScope::AllAgents;
        else
            throw ConfigError("unknown box_scope '" + v + "'");
    };
}

void write_gains(std::ostream& out, const char* section, const ControllerGains& g) {
    out << '[' << section << "]\n"
        << "lambda1 = " << fmt(g.barrier.lambda1) << '\n'
        << "lambda2 = " << fmt(g.barrier.lambda2) << '\n'
        << "beta = " << fmt(g.barrier.beta) << '\n'
        << "tau_f = " << fmt(g.barrier.tau_f) << '\n'
        << "tau_w = " << fmt(g.tau_w) << '\n'
        << "alpha = " << fmt(g.alpha) << '\n'
        << "slack_weight = " << fmt(g.slack_weight) << '\n'
        << "speed_gain = " << fmt(g.speed_gain) << '\n'
        << "accel_min = " << fmt(g.limits.min) << '\n'
        << "accel_max = " << fmt(g.limits.max) << '\n'
        << "observer = " << observer_name(g.observer) << '\n'
        << "box_scope = " << scope_name(g.box_scope) << "\n\n";
}

}  // namespace

ScenarioConfig parse_config(std::istream& in) {
    ScenarioConfig cfg;
    std::optional<double> fault_trigger;
    bool fault_enabled = false;

    std::map<std::string, Setter> keys;
    auto num = [&](const std::string& key, double& field) {
        keys[key] = [&field, key](const std::string& v) { field = parse_double(v, key); };
    };
    num("scenario.merge_angle_rad", cfg.road.merge_angle_rad);
    num("scenario.cz_upstream_m", cfg.road.cz_upstream_m);
    num("scenario.cz_downstream_m", cfg.road.cz_downstream_m);
    num("scenario.speed_min_mps", cfg.speed_mps.lo);
    num("scenario.speed_max_mps", cfg.speed_mps.hi);
    num("scenario.rate_min_vph", cfg.rate_vph.lo);
    num("scenario.rate_max_vph", cfg.rate_vph.hi);
    num("scenario.mass_min_kg", cfg.mass_kg.lo);
    num("scenario.mass_max_kg", cfg.mass_kg.hi);
    num("scenario.radius_min_m", cfg.radius_m.lo);
    num("scenario.radius_max_m", cfg.radius_m.hi);
    num("scenario.headway_jitter", cfg.headway_jitter);
    num("scenario.Ts", cfg.Ts);
    num("scenario.max_time_s", cfg.max_time_s);
    keys["scenario.mass_base_lb"] = [&cfg](const std::string& v) {
        const double m = parse_double(v, "mass_base_lb") * kKgPerLb;
        cfg.mass_kg = {m, 4.0 * m};
    };
    keys["scenario.vehicles_per_lane"] = [&cfg](const std::string& v) {
        cfg.vehicles_per_lane = parse_int(v, "vehicles_per_lane");
    };
    keys["scenario.coast_down_csv"] = [&cfg](const std::string& v) { cfg.coast_down_csv = v; };
    keys["batch.seed"] = [&cfg](const std::string& v) { cfg.seed = parse_u64(v, "seed"); };
    keys["batch.runs"] = [&cfg](const std::string& v) { cfg.runs = parse_int(v, "runs"); };
    keys["batch.workers"] = [&cfg](const std::string& v) { cfg.workers = parse_int(v, "workers"); };
    keys["fault.enabled"] = [&fault_enabled](const std::string& v) {
        if (v != "true" && v != "false") throw ConfigError("fault.enabled must be true or false");
        fault_enabled = v == "true";
    };
    keys["fault.trigger_s"] = [&fault_trigger](const std::string& v) {
        fault_trigger = parse_double(v, "fault.trigger_s");
    };
    gains_keys(keys, "dpc-cbf", cfg.dpc);
    gains_keys(keys, "c-cbf", cfg.ccbf);
    gains_keys(keys, "fifo", cfg.fifo);

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const auto it = keys.find(key);
        if (it == keys.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(trim(line.substr(eq + 1)));
    }

    if (fault_enabled) cfg.fault = FaultCampaign{fault_trigger.value_or(-150.0)};
    for (ControllerGains* g : {&cfg.dpc, &cfg.ccbf, &cfg.fifo}) g->Ts = cfg.Ts;
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config(in);
}

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "[scenario]\n"
        << "merge_angle_rad = " << fmt(cfg.road.merge_angle_rad) << '\n'
        << "cz_upstream_m = " << fmt(cfg.road.cz_upstream_m) << '\n'
        << "cz_downstream_m = " << fmt(cfg.road.cz_downstream_m) << '\n'
        << "vehicles_per_lane = " << cfg.vehicles_per_lane << '\n'
        << "speed_min_mps = " << fmt(cfg.speed_mps.lo) << '\n'
        << "speed_max_mps = " << fmt(cfg.speed_mps.hi) << '\n'
        << "rate_min_vph = " << fmt(cfg.rate_vph.lo) << '\n'
        << "rate_max_vph = " << fmt(cfg.rate_vph.hi) << '\n'
        << "mass_min_kg = " << fmt(cfg.mass_kg.lo) << '\n'
        << "mass_max_kg = " << fmt(cfg.mass_kg.hi) << '\n'
        << "radius_min_m = " << fmt(cfg.radius_m.lo) << '\n'
        << "radius_max_m = " << fmt(cfg.radius_m.hi) << '\n'
        << "headway_jitter = " << fmt(cfg.headway_jitter) << '\n'
        << "Ts = " << fmt(cfg.Ts) << '\n'
        << "max_time_s = " << fmt(cfg.max_time_s) << '\n';
    if (!cfg.coast_down_csv.empty()) out << "coast_down_csv = " << cfg.coast_down_csv << '\n';
    out << "\n[batch]\n"
        << "seed = " << cfg.seed << '\n'
        << "runs = " << cfg.runs << '\n'
        << "workers = " << cfg.workers << "\n\n";
    write_gains(out, "dpc-cbf", cfg.dpc);
    write_gains(out, "c-cbf", cfg.ccbf);
    write_gains(out, "fifo", cfg.fifo);
    out << "[fault]\n" << "enabled = " << (cfg.fault ? "true" : "false") << '\n';
    if (cfg.fault) out << "trigger_s = " << fmt(cfg.fault->trigger_s) << '\n';
    return out.str();
}

}  // namespace dpcmerge
