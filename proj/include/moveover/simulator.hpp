#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "moveover/controller.hpp"
#include "moveover/layout.hpp"
#include "moveover/metrics.hpp"
#include "moveover/negotiation.hpp"
#include "moveover/planner.hpp"

namespace moveover {

class ConfigError : public std::invalid_argument {
 public:
  // `field` is the dotted path of the offending entry, e.g. "traffic_light.green".
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Method { Priority, TrafficLight, Fifo, Moveover };
std::string to_string(Method m);
Method parse_method(const std::string& s);

struct TrafficLightTiming {
  double green = 35.0;
  double yellow = 3.0;
  double left_extension = 0.0;  // extra green for left turns after the main green
};

TrafficLightTiming default_traffic_light(LayoutKind kind);
// Negotiation-zone length for a network on a layout; 0 for ideal communication.
double default_negotiation_length(LayoutKind kind, const std::string& network);

struct FollowingParams {
  double a_max = 2.6;
  double comfort_decel = 4.5;
  double emergency_decel = 9.0;
  double min_gap = 2.5;
  double reaction = 1.0;  // s, desired time headway on top of min_gap
};

struct ScenarioConfig {
  LayoutKind layout = LayoutKind::FourWay1L;
  LayoutParams layout_overrides;
  Method method = Method::Moveover;
  DelayModel network = DelayModel::ideal();
  std::optional<double> negotiation_length;  // default from layout and network
  double rate = 0.1;  // Poisson arrivals per second per incoming road
  double duration = 7200.0;
  double timestep = 0.1;
  std::uint64_t seed = 1;
  VehicleParams vehicle;  // v_max / v_max_turn are taken from the layout when unset here
  bool vehicle_speeds_from_layout = true;
  ControllerParams controller;
  FollowingParams following;
  std::optional<TrafficLightTiming> traffic_light;
  double yield_gap = 4.0;  // s, critical gap for yielding approaches
  EmissionModel emission;
  bool event_log = false;

  void validate() const;
  IntersectionLayout build() const;
  VehicleParams vehicle_for(const IntersectionLayout& layout) const;
};

// Speed the follower may reach after one step and still stop behind a leader
// braking at `decel` from `leader_speed`, after a reaction time (dt/2 if unset
// or shorter).
double safe_speed(double gap, double leader_speed, double v, double decel, double dt,
                  double reaction = 0.0);

struct Leader {
  double rear = 0.0;   // leader rear bumper, follower coordinates
  double speed = 0.0;
  double min_gap = 0.0;
};

// Acceleration of a free-driving follower for one step; never below
// -emergency_decel and never above a_max.
double car_following_accel(const std::optional<Leader>& leader, double s, double v, double v_limit,
                           const FollowingParams& params, double dt);

struct EventRecord {
  double t = 0.0;
  int vehicle = 0;
  std::string event;
  double position = 0.0;
  double speed = 0.0;
};

struct RunOutput {
  RunMetrics metrics;
  std::vector<EventRecord> events;  // filled when ScenarioConfig::event_log is set
};

RunOutput run(const ScenarioConfig& config);

std::string events_csv(const std::vector<EventRecord>& events);

}  // namespace moveover
