#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace moveover {

class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayoutKind { FourWay1L, ThreeWay1L, Roundabout, FourWay2L };
enum class Road { North, East, South, West };
enum class LaneDirection { Incoming, Outgoing };
enum class TurnKind { Straight, Left, Right, RoundaboutExit1, RoundaboutExit2, RoundaboutExit3 };

std::string_view to_string(LayoutKind kind);
std::string_view to_string(Road road);
std::string_view to_string(TurnKind turn);
LayoutKind parse_layout_kind(std::string_view text);
Road parse_road(std::string_view text);

inline bool is_turn(TurnKind t) { return t == TurnKind::Left || t == TurnKind::Right; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Lane {
  int id = 0;
  Road road = Road::North;
  LaneDirection direction = LaneDirection::Incoming;
  // 0 is the kerb-side lane, 1 the median-side lane on two-lane roads.
  int index = 0;
  double width = 3.2;
};

// Oriented rectangle in intersection-local coordinates; `length` runs along
// `heading` (radians), `width` across it.
struct ConflictZone {
  int id = 0;
  Vec2 center;
  double length = 0.0;
  double width = 0.0;
  double heading = 0.0;

  bool contains(Vec2 p) const;
  std::vector<Vec2> corners() const;
};

// Straight segment (curvature 0) or circular arc; positive curvature turns left.
struct PathSegment {
  Vec2 start;
  double heading = 0.0;
  double length = 0.0;
  double curvature = 0.0;

  Vec2 point_at(double u) const;
  double heading_at(double u) const;
};

// Arc positions are metres along the path measured from the negotiation-zone
// start, so every position before the intersection is shared by all paths of
// the same incoming lane.
struct ZoneInterval {
  int zone = 0;
  double enter = 0.0;
  double exit = 0.0;
};

struct Path {
  int id = 0;
  int entry_lane = 0;
  int exit_lane = 0;
  Road entry_road = Road::North;
  Road exit_road = Road::North;
  TurnKind turn = TurnKind::Straight;
  // Distance from the road origin (spawn point) to the negotiation-zone start.
  double upstream_length = 0.0;
  double intersection_entry = 0.0;
  double intersection_exit = 0.0;
  double total_length = 0.0;
  std::vector<ZoneInterval> zone_intervals;
  // Geometry from the intersection entry to the intersection exit.
  std::vector<PathSegment> geometry;

  Vec2 position_at(double s) const;
  const ZoneInterval* interval_for(int zone) const;
  bool crosses(int zone) const { return interval_for(zone) != nullptr; }
};

struct NegotiationZone {
  int lane = 0;
  double start_pos = 0.0;
  double length = 0.0;
  double hold_speed = 0.0;
};

// Dimension overrides. Unset fields take the per-kind defaults.
struct LayoutParams {
  std::optional<double> approach_length;
  std::optional<double> exit_length;
  std::optional<double> lane_width;
  std::optional<double> negotiation_length;
  std::optional<double> hold_speed;
  std::optional<double> v_max;
  std::optional<double> v_max_turn;
  std::optional<double> braking_decel;  // used for the negotiation distance check
  std::optional<double> zone_side;      // four-way single lane squares
  std::optional<double> zone_length;    // rectangular zones
  std::optional<double> zone_width;
  std::optional<double> square_side;    // roundabout / two-lane squares
  std::optional<double> ring_radius;
  std::optional<double> left_turn_radius;  // three-way single lane
};

class IntersectionLayout {
 public:
  LayoutKind kind = LayoutKind::FourWay1L;
  std::vector<Lane> lanes;
  std::vector<ConflictZone> conflict_zones;
  std::vector<Path> paths;
  std::vector<NegotiationZone> negotiation_zones;
  double approach_length = 100.0;
  double v_max = 0.0;
  double v_max_turn = 0.0;
  double min_negotiation_distance = 0.0;

  const Path& path_for(int entry_lane, int exit_lane) const;
  const Path& path_for(Road entry, Road exit) const;
  const Path& path(int id) const;
  const Lane& lane(int id) const;
  const ConflictZone& zone(int id) const;
  const NegotiationZone& negotiation_zone(int lane_id) const;

  std::vector<Road> incoming_roads() const;
  std::vector<const Path*> paths_from(Road entry) const;
  std::vector<int> incoming_lanes() const;
  bool is_priority_road(Road road) const;
};

IntersectionLayout build_layout(LayoutKind kind, const LayoutParams& params = {});

// Braking distance needed to stop from the negotiation hold speed.
double min_negotiation_distance(double v_neg, double braking_decel);
// Highest hold speed that can still stop within `distance`.
double max_negotiation_speed(double distance, double braking_decel);
double min_negotiation_length(double v_neg, double t_neg_max);

}  // namespace moveover
