#include "moveover/experiment.hpp"

#include <algorithm>
#include <numeric>

namespace moveover {

RunMetrics run_pooled(ScenarioConfig config, double rate, const std::vector<std::uint64_t>& seeds) {
  RunMetrics out;
  config.rate = rate;
  config.event_log = false;
  for (std::uint64_t seed : seeds) {
    config.seed = seed;
    RunMetrics m = run(config).metrics;
    out.vehicles.insert(out.vehicles.end(), m.vehicles.begin(), m.vehicles.end());
    out.backups.insert(out.backups.end(), m.backups.begin(), m.backups.end());
    out.spawned += m.spawned;
    out.steps += m.steps;
    out.safety.co_occupancy += m.safety.co_occupancy;
    out.safety.table_violations += m.safety.table_violations;
    out.safety.teleports += m.safety.teleports;
    out.safety.rear_end += m.safety.rear_end;
    out.safety.protocol_violations += m.safety.protocol_violations;
    out.safety.max_tracking_error = std::max(out.safety.max_tracking_error, m.safety.max_tracking_error);
  }
  return out;
}

double capacity_threshold(const ScenarioConfig& config, const SweepSettings& sweep) {
  ScenarioConfig ref = config;
  ref.method = Method::Priority;
  ref.network = DelayModel::ideal();
  ref.negotiation_length.reset();
  const auto tt = travel_times(run_pooled(ref, sweep.reference_rate, sweep.seeds), true);
  if (tt.empty()) throw MetricsError("reference run completed no vehicles");
  return sweep.threshold_factor * std::accumulate(tt.begin(), tt.end(), 0.0) / tt.size();
}

CapacityResult sweep_capacity(const ScenarioConfig& config, const SweepSettings& sweep, double threshold,
                              bool parallel) {
  return capacity_sweep(
      sweep.densities, threshold, [&](double d) { return run_pooled(config, d, sweep.seeds); }, parallel);
}

}  // namespace moveover
