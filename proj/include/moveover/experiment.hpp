#pragma once

#include <cstdint>
#include <vector>

#include "moveover/config.hpp"
#include "moveover/metrics.hpp"
#include "moveover/simulator.hpp"

namespace moveover {

// One run per seed at `rate`, vehicle records concatenated in seed order.
RunMetrics run_pooled(ScenarioConfig config, double rate, const std::vector<std::uint64_t>& seeds);

// factor x mean completed travel time of the priority method at the
// reference rate, on the template's layout with ideal communication.
double capacity_threshold(const ScenarioConfig& config, const SweepSettings& sweep);

// Capacity of the template's method and network over the sweep grid.
CapacityResult sweep_capacity(const ScenarioConfig& config, const SweepSettings& sweep, double threshold,
                              bool parallel = true);

}  // namespace moveover
