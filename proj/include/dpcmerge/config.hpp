#pragma once

#include "dpcmerge/controllers.hpp"
#include "dpcmerge/geometry.hpp"
#include "dpcmerge/simulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace dpcmerge {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const Range&) const = default;
};

struct FaultCampaign {
    double trigger_s = -150.0;  // victim loses power on reaching this position
    // Victim drawn uniformly from [n/3, n - n/3) of its lane's injection order.
    bool operator==(const FaultCampaign&) const = default;
};

struct ScenarioConfig {
    RoadNetwork road;
    int vehicles_per_lane = 10;
    Range speed_mps{20.0, 25.0};
    Range rate_vph{1100.0, 1200.0};
    Range mass_kg{2375.0 * kKgPerLb, 4.0 * 2375.0 * kKgPerLb};
    Range radius_m{2.0, 4.0};
    double headway_jitter = 0.25;  // arrival gaps are headway * (1 + jitter * U(-1, 1))
    double Ts = 0.1;
    double max_time_s = 300.0;
    std::uint64_t seed = 1;
    int runs = 500;
    int workers = 1;
    std::string coast_down_csv;  // empty: built-in table
    ControllerGains dpc = ControllerGains::dpc_default();
    ControllerGains ccbf = ControllerGains::c_cbf_default();
    ControllerGains fifo = ControllerGains::fifo_default();
    std::optional<FaultCampaign> fault;

    const ControllerGains& gains_for(ControllerKind kind) const;
    void validate() const;  // throws ConfigError

    bool operator==(const ScenarioConfig&) const = default;
};

// Sectioned key = value text, SI units throughout. `mass_base_lb` is accepted
// as a convenience and converted to the kg mass range [m, 4 m].
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace dpcmerge
