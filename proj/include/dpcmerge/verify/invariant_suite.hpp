#pragma once

#include "dpcmerge/config.hpp"
#include "dpcmerge/step_log.hpp"

#include <string>
#include <vector>

namespace dpcmerge::verify {

struct InvariantCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Largest |w-hat[i|i]| over every logged host and step.
double max_abs_w_hat_self(const RunLog& log);

// Constant-speed log of `vehicles` vehicles crossing the whole control zone.
RunLog cruise_log(const RoadNetwork& road, int vehicles, double speed, double Ts);

// Runs the first `runs` sampled scenarios of cfg under every controller and
// checks: zero self-estimates, TEL >= BE per vehicle, PaKE = 0 on cruise logs,
// bit-identical replays, and host-order independence for DPC-CBF.
std::vector<InvariantCheck> run_invariant_suite(const ScenarioConfig& cfg, int runs);

}  // namespace dpcmerge::verify
