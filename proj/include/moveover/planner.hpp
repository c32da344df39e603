#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "moveover/layout.hpp"

namespace moveover {

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VehicleParams {
  double v_max = 50.0 / 3.6;
  double v_max_turn = 20.0 / 3.6;
  double a_max = 2.6;
  double b_max = -4.5;  // comfort deceleration, negative
  double v_min = 1.0;
  double length = 5.0;
  double width = 1.8;

  void validate() const;
};

struct Waypoint {
  double t = 0.0;
  double s = 0.0;
  double v = 0.0;
};

// Piecewise-constant acceleration between consecutive waypoints. Outside the
// waypoint span the vehicle is extrapolated at the boundary speed.
class MobilityProfile {
 public:
  std::vector<Waypoint> waypoints;
  double t_start = 0.0;
  double t_int = 0.0;
  double t_end = 0.0;

  double position(double t) const;
  double speed(double t) const;
  double acceleration(double t) const;
  // Earliest time the front bumper reaches arc position `s`. Throws when `s`
  // lies outside the waypoint span.
  double time_at(double s) const;
  double start_position() const { return waypoints.front().s; }
  double end_position() const { return waypoints.back().s; }
};

struct ZoneWindow {
  int zone = 0;
  double t_enter_min = 0.0;
  double t_exit_max = std::numeric_limits<double>::infinity();
};

struct ZoneTime {
  int zone = 0;
  double t_enter = 0.0;
  double t_exit = 0.0;
};

inline constexpr int kMaxWaypoints = 40;
inline constexpr double kWindowTolerance = 1e-3;

std::vector<ZoneTime> profile_zone_times(const MobilityProfile& profile, const Path& path,
                                         double vehicle_length);

MobilityProfile propose_profile(const VehicleParams& params, const Path& path, double t0, double v0,
                                const NegotiationZone& neg_zone);

enum class ReplanStatus { Feasible, Fallback, Infeasible };

struct ReplanResult {
  ReplanStatus status = ReplanStatus::Infeasible;
  std::optional<MobilityProfile> profile;
  // 0 = proposal already fits, 1 = postponed acceleration, 2 = lower cruise
  // speed, 3 = decelerate-cruise-accelerate.
  int stage = 0;
};

ReplanResult replan_profile(const VehicleParams& params, const Path& path, double t0, double v0,
                            const NegotiationZone& neg_zone, const std::vector<ZoneWindow>& windows);

bool windows_satisfied(const std::vector<ZoneTime>& times, const std::vector<ZoneWindow>& windows,
                       double tol = kWindowTolerance);

// Returns the list of violated profile invariants; empty when the profile is valid.
std::vector<std::string> validate_profile(const MobilityProfile& profile, const VehicleParams& params,
                                          const Path& path, const NegotiationZone& neg_zone);

}  // namespace moveover
