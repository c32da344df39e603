#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace moveover {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct VehicleRecord {
  int id = 0;
  std::string entry_road;
  std::string exit_road;
  double depart = 0.0;  // spawn request; includes any wait at a blocked road origin
  double arrive = 0.0;  // left the exit road, or the end of the run when not completed
  double travel_time = 0.0;
  double co2_kg = 0.0;
  int stops = 0;
  double min_speed = 0.0;
  int messages = 0;  // proposals + responses of an agreed negotiation, 0 otherwise
  bool negotiated = false;
  bool backup = false;     // drove under backup rules at some point
  bool completed = false;  // reached the end of its exit road within the run
};

struct BackupEvent {
  double t_start = 0.0;
  double t_end = -1.0;  // -1 while still active at the end of the run
  int cav = -1;
  std::string cause;
};

struct SafetyReport {
  std::uint64_t co_occupancy = 0;      // (step, zone) pairs with two bodies inside
  std::uint64_t table_violations = 0;  // commits that left overlapping reservations
  std::uint64_t teleports = 0;         // per-step displacement above the kinematic bound
  std::uint64_t rear_end = 0;          // (step, pair) body overlaps on a shared lane
  double max_tracking_error = 0.0;     // metres from the committed profile
  std::uint64_t protocol_violations = 0;

  bool clean() const { return co_occupancy == 0 && table_violations == 0 && teleports == 0; }
};

struct RunMetrics {
  std::vector<VehicleRecord> vehicles;
  std::vector<BackupEvent> backups;
  SafetyReport safety;
  std::uint64_t spawned = 0;
  std::uint64_t steps = 0;
};

// rate(v, a) = max(0, c0 + c1 v a + c2 v a^2 + c3 v + c4 v^2 + c5 v^3) in g/s.
// Default coefficients give about 1 g/s at idle and 2.3 g/s at a 50 km/h cruise.
struct EmissionModel {
  double c0 = 1.0;
  double c1 = 0.10;
  double c2 = 0.010;
  double c3 = 0.060;
  double c4 = 1.5e-3;
  double c5 = 6.64e-5;

  double rate(double v, double a) const;
};

struct KinematicSample {
  double v = 0.0;
  double a = 0.0;
};

// Timestep-weighted integral of the emission rate, in kg.
double emissions(const std::vector<KinematicSample>& samples, double dt, const EmissionModel& model);

// Nearest-rank percentile, p in (0, 100].
double percentile(std::vector<double> values, double p);

struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, p90 = 0.0, mean = 0.0;
  std::size_t count = 0;
};
BoxStats box_stats(const std::vector<double>& values);

std::vector<double> travel_times(const RunMetrics& run, bool completed_only);
std::vector<double> co2_values(const RunMetrics& run);

// Empirical distribution over message counts of agreed negotiations.
std::map<int, double> message_histogram(const RunMetrics& run);
double share_at_most(const std::map<int, double>& histogram, int messages);

struct CapacityPoint {
  double density = 0.0;
  double p90 = 0.0;
  bool sustainable = false;
};

struct CapacityResult {
  double threshold = 0.0;
  std::vector<CapacityPoint> points;
  std::optional<double> capacity;  // empty: below the grid minimum
  bool monotone = true;            // sustainability never returns after a failure
};

// Runs `run_at(density)` on an ascending grid and returns the largest density
// whose 90th-percentile travel time stays below `threshold`.
CapacityResult capacity_sweep(const std::vector<double>& grid, double threshold,
                              const std::function<RunMetrics(double)>& run_at, bool parallel = true);

std::string vehicles_csv(const RunMetrics& run);
std::string box_stats_csv(const std::vector<std::pair<std::string, BoxStats>>& rows);
std::string summary_json(const RunMetrics& run, const std::string& label);

}  // namespace moveover
