#pragma once

#include "dpcmerge/config.hpp"
#include "dpcmerge/simulation.hpp"
#include "dpcmerge/vehicle.hpp"

#include <cstdint>

namespace dpcmerge {

// Linear map of mass onto the configured radius range.
double radius_for_mass(double mass_kg, const ScenarioConfig& cfg);

// Draws one concrete scenario from the substream (cfg.seed, run_index).
// Highway vehicles get ids 1..n, merge vehicles n+1..2n. With a fault
// campaign configured, runs k < runs / 2 pick a highway victim and the rest a
// merge victim, both from the middle third of that lane's injection order.
Scenario sample_scenario(const ScenarioConfig& cfg, std::uint64_t run_index,
                         const CoastDownTable& table = CoastDownTable::builtin());

// Two vehicles per lane, 4500 lb each, all at 20 m/s: H1 at s = -150,
// M1 at -149.9, H2 at -190, M2 at -190.1. Desired speed equals initial speed.
Scenario four_vehicle_scenario(const CoastDownTable& table = CoastDownTable::builtin());

// FNV-1a over every numeric field; equal for identical scenarios.
std::uint64_t scenario_hash(const Scenario& scenario);

}  // namespace dpcmerge
