#include "moveover/layout.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace moveover {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kKmh = 1.0 / 3.6;
constexpr double kSampleStep = 0.005;

Vec2 rotate(Vec2 p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

PathSegment straight(Vec2 from, Vec2 to) {
  PathSegment seg;
  seg.start = from;
  seg.heading = std::atan2(to.y - from.y, to.x - from.x);
  seg.length = std::hypot(to.x - from.x, to.y - from.y);
  return seg;
}

// Arc starting at `from` with initial `heading`, turning by `sweep` radians
// (positive = left) on a circle of `radius`.
PathSegment arc(Vec2 from, double heading, double radius, double sweep) {
  PathSegment seg;
  seg.start = from;
  seg.heading = heading;
  seg.length = radius * std::abs(sweep);
  seg.curvature = (sweep >= 0.0 ? 1.0 : -1.0) / radius;
  return seg;
}

PathSegment rotated(const PathSegment& seg, double angle) {
  PathSegment out = seg;
  out.start = rotate(seg.start, angle);
  out.heading = wrap_angle(seg.heading + angle);
  return out;
}

Road rotate_road(Road road, int quarter_turns) {
  // Counter-clockwise order of arms, as seen from above: W -> S -> E -> N.
  static constexpr std::array<Road, 4> ccw{Road::West, Road::South, Road::East, Road::North};
  int idx = 0;
  for (int i = 0; i < 4; ++i) {
    if (ccw[i] == road) idx = i;
  }
  return ccw[(idx + quarter_turns % 4 + 4) % 4];
}

// Arm axis angle pointing outward from the intersection centre.
double arm_angle(Road road) {
  switch (road) {
    case Road::East: return 0.0;
    case Road::North: return kPi / 2.0;
    case Road::West: return kPi;
    case Road::South: return -kPi / 2.0;
  }
  return 0.0;
}

ConflictZone rect_zone(int id, double x0, double y0, double x1, double y1) {
  ConflictZone z;
  z.id = id;
  z.center = {(x0 + x1) / 2.0, (y0 + y1) / 2.0};
  z.length = x1 - x0;
  z.width = y1 - y0;
  z.heading = 0.0;
  return z;
}

bool zones_overlap(const ConflictZone& a, const ConflictZone& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  std::array<double, 4> axes{a.heading, a.heading + kPi / 2.0, b.heading, b.heading + kPi / 2.0};
  for (double ang : axes) {
    const Vec2 ax{std::cos(ang), std::sin(ang)};
    auto project = [&](const std::vector<Vec2>& pts) {
      double lo = 1e300, hi = -1e300;
      for (const auto& p : pts) {
        const double d = p.x * ax.x + p.y * ax.y;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
      return std::pair{lo, hi};
    };
    const auto [alo, ahi] = project(ca);
    const auto [blo, bhi] = project(cb);
    if (ahi <= blo + 1e-9 || bhi <= alo + 1e-9) return false;
  }
  return true;
}

struct Resolved {
  double approach;
  double exit_length;
  double lane_width;
  double neg_length;
  double hold_speed;
  double v_max;
  double v_max_turn;
  double braking;
};

Resolved resolve_common(LayoutKind kind, const LayoutParams& p) {
  Resolved r{};
  r.approach = p.approach_length.value_or(100.0);
  r.exit_length = p.exit_length.value_or(r.approach);
  r.lane_width = p.lane_width.value_or(3.2);
  r.neg_length = p.negotiation_length.value_or(0.0);
  r.v_max = p.v_max.value_or(kind == LayoutKind::Roundabout ? 23.0 * kKmh : 50.0 * kKmh);
  // Roundabout paths have no separate turning limit: the ring speed is the limit.
  r.v_max_turn = p.v_max_turn.value_or(kind == LayoutKind::Roundabout ? r.v_max : 20.0 * kKmh);
  r.hold_speed = p.hold_speed.value_or(r.v_max);
  r.braking = p.braking_decel.value_or(4.5);
  if (r.approach <= 0.0) throw LayoutError("approach_length must be positive");
  if (r.exit_length <= 0.0) throw LayoutError("exit_length must be positive");
  if (r.lane_width <= 0.0) throw LayoutError("lane_width must be positive");
  if (r.neg_length < 0.0) throw LayoutError("negotiation_length must be non-negative");
  if (r.v_max <= 0.0) throw LayoutError("v_max must be positive");
  if (r.v_max_turn <= 0.0 || r.v_max_turn > r.v_max)
    throw LayoutError("v_max_turn must be in (0, v_max]");
  if (r.hold_speed <= 0.0 || r.hold_speed > r.v_max)
    throw LayoutError("hold_speed must be in (0, v_max]");
  if (r.braking <= 0.0) throw LayoutError("braking_decel must be positive");
  return r;
}

// Builds lanes for the given roads. Returns lane ids keyed by (road, direction, index).
class LaneBook {
 public:
  int add(IntersectionLayout& layout, Road road, LaneDirection dir, int index, double width) {
    Lane lane;
    lane.id = static_cast<int>(layout.lanes.size());
    lane.road = road;
    lane.direction = dir;
    lane.index = index;
    lane.width = width;
    layout.lanes.push_back(lane);
    return lane.id;
  }
  static int find(const IntersectionLayout& layout, Road road, LaneDirection dir, int index) {
    for (const auto& l : layout.lanes) {
      if (l.road == road && l.direction == dir && l.index == index) return l.id;
    }
    throw LayoutError("lane not found");
  }
};

// Path skeleton in intersection coordinates before arc positions are assigned.
struct PathSketch {
  Road entry;
  Road exit;
  int entry_index;
  int exit_index;
  TurnKind turn;
  std::vector<PathSegment> geometry;
};

void finish_path(IntersectionLayout& layout, const PathSketch& sketch, const Resolved& r) {
  Path path;
  path.id = static_cast<int>(layout.paths.size());
  path.entry_road = sketch.entry;
  path.exit_road = sketch.exit;
  path.turn = sketch.turn;
  path.entry_lane =
      LaneBook::find(layout, sketch.entry, LaneDirection::Incoming, sketch.entry_index);
  path.exit_lane = LaneBook::find(layout, sketch.exit, LaneDirection::Outgoing, sketch.exit_index);
  path.upstream_length = r.approach;
  path.geometry = sketch.geometry;
  double inside = 0.0;
  for (const auto& seg : path.geometry) inside += seg.length;
  path.intersection_entry = r.approach;
  path.intersection_exit = r.approach + inside;
  path.total_length = path.intersection_exit + r.exit_length;

  // Zone intervals: sample the centreline a few metres either side of the
  // intersection and refine every boundary crossing by bisection.
  const double lo = path.intersection_entry - 5.0;
  const double hi = path.intersection_exit + 5.0;
  for (const auto& zone : layout.conflict_zones) {
    auto inside_at = [&](double s) { return zone.contains(path.position_at(s)); };
    auto refine = [&](double a, double b) {
      const bool at_a = inside_at(a);
      for (int i = 0; i < 60; ++i) {
        const double m = 0.5 * (a + b);
        if (inside_at(m) == at_a) a = m; else b = m;
      }
      return 0.5 * (a + b);
    };
    std::optional<double> enter;
    bool prev = inside_at(lo);
    if (prev) throw LayoutError("zone " + std::to_string(zone.id) + " reaches into the approach");
    const int n = static_cast<int>(std::ceil((hi - lo) / kSampleStep));
    for (int i = 1; i <= n; ++i) {
      const double s0 = lo + (i - 1) * (hi - lo) / n;
      const double s1 = lo + i * (hi - lo) / n;
      const bool cur = inside_at(s1);
      if (cur && !prev) {
        if (enter) throw LayoutError("path re-enters zone " + std::to_string(zone.id));
        enter = refine(s0, s1);
      } else if (!cur && prev) {
        path.zone_intervals.push_back({zone.id, *enter, refine(s0, s1)});
      }
      prev = cur;
    }
    if (prev) throw LayoutError("zone " + std::to_string(zone.id) + " reaches into the exit road");
  }
  std::sort(path.zone_intervals.begin(), path.zone_intervals.end(),
            [](const ZoneInterval& a, const ZoneInterval& b) { return a.enter < b.enter; });
  // Intervals are snapped to the millimetre; the boundaries are geometric
  // constructions and sub-millimetre noise only confuses downstream equality.
  for (auto& zi : path.zone_intervals) {
    zi.enter = std::round(zi.enter * 1e6) / 1e6;
    zi.exit = std::round(zi.exit * 1e6) / 1e6;
  }
  if (path.zone_intervals.empty()) throw LayoutError("path crosses no conflict zone");
  for (size_t i = 0; i < path.zone_intervals.size(); ++i) {
    const auto& zi = path.zone_intervals[i];
    if (zi.exit <= zi.enter) throw LayoutError("degenerate zone interval");
    if (i > 0 && zi.enter < path.zone_intervals[i - 1].exit - 1e-6)
      throw LayoutError("zone intervals overlap along a path");
  }
  if (path.zone_intervals.front().enter < path.intersection_entry - 1e-6)
    throw LayoutError("first zone starts before the intersection entry");
  layout.paths.push_back(std::move(path));
}

// Four-way layouts are described for the west arm (heading east) and rotated.
void add_rotated_paths(IntersectionLayout& layout, const std::vector<PathSketch>& west,
                       const Resolved& r) {
  for (int q = 0; q < 4; ++q) {
    const double angle = q * kPi / 2.0;
    for (const auto& sk : west) {
      PathSketch out = sk;
      out.entry = rotate_road(sk.entry, q);
      out.exit = rotate_road(sk.exit, q);
      for (auto& seg : out.geometry) seg = rotated(seg, angle);
      finish_path(layout, out, r);
    }
  }
}

void build_four_way_1l(IntersectionLayout& layout, const LayoutParams& p, const Resolved& r) {
  const double side = p.zone_side.value_or(7.2);
  if (side <= 0.0) throw LayoutError("zone_side must be positive");
  const double h = side;        // half-size of the junction box
  const double o = side / 2.0;  // lane-centre offset
  layout.conflict_zones = {rect_zone(1, -h, -h, 0, 0), rect_zone(2, 0, -h, h, 0),
                           rect_zone(3, 0, 0, h, h), rect_zone(4, -h, 0, 0, h)};
  LaneBook book;
  for (Road road : {Road::North, Road::East, Road::South, Road::West}) {
    book.add(layout, road, LaneDirection::Incoming, 0, r.lane_width);
    book.add(layout, road, LaneDirection::Outgoing, 0, r.lane_width);
  }
  const Vec2 entry{-h, -o};
  std::vector<PathSketch> west;
  west.push_back({Road::West, Road::East, 0, 0, TurnKind::Straight, {straight(entry, {h, -o})}});
  west.push_back({Road::West, Road::South, 0, 0, TurnKind::Right, {arc(entry, 0.0, h - o, -kPi / 2)}});
  west.push_back({Road::West, Road::North, 0, 0, TurnKind::Left, {arc(entry, 0.0, h + o, kPi / 2)}});
  add_rotated_paths(layout, west, r);
}

void build_four_way_2l(IntersectionLayout& layout, const LayoutParams& p, const Resolved& r) {
  const double rect_len = p.zone_length.value_or(8.2);
  const double rect_w = p.zone_width.value_or(3.2);
  const double sq = p.square_side.value_or(3.2);
  if (rect_len <= 0.0 || rect_w <= 0.0 || sq <= 0.0)
    throw LayoutError("zone dimensions must be positive");
  if (std::abs(rect_w - sq) > 1e-9)
    throw LayoutError("zone_width must equal square_side for the two-lane layout");
  const double h = sq + rect_len / 2.0;
  const double outer = h - sq / 2.0;
  const double inner = outer - r.lane_width;
  const double c = h - sq / 2.0;
  layout.conflict_zones = {
      rect_zone(1, -h, -h, -h + sq, -h + sq), rect_zone(2, h - sq, -h, h, -h + sq),
      rect_zone(3, h - sq, h - sq, h, h),     rect_zone(4, -h, h - sq, -h + sq, h),
  };
  ConflictZone south = rect_zone(5, -rect_len / 2, -h, rect_len / 2, -h + rect_w);
  ConflictZone east;
  east.id = 6;
  east.center = {c, 0.0};
  east.length = rect_len;
  east.width = rect_w;
  east.heading = kPi / 2.0;
  ConflictZone north = rect_zone(7, -rect_len / 2, h - rect_w, rect_len / 2, h);
  ConflictZone westz = east;
  westz.id = 8;
  westz.center = {-c, 0.0};
  layout.conflict_zones.push_back(south);
  layout.conflict_zones.push_back(east);
  layout.conflict_zones.push_back(north);
  layout.conflict_zones.push_back(westz);
  LaneBook book;
  for (Road road : {Road::North, Road::East, Road::South, Road::West}) {
    for (int idx = 0; idx < 2; ++idx) {
      book.add(layout, road, LaneDirection::Incoming, idx, r.lane_width);
      book.add(layout, road, LaneDirection::Outgoing, idx, r.lane_width);
    }
  }
  const Vec2 outer_entry{-h, -outer};
  const Vec2 inner_entry{-h, -inner};
  std::vector<PathSketch> west;
  west.push_back(
      {Road::West, Road::East, 0, 0, TurnKind::Straight, {straight(outer_entry, {h, -outer})}});
  west.push_back(
      {Road::West, Road::South, 0, 0, TurnKind::Right, {arc(outer_entry, 0.0, h - outer, -kPi / 2)}});
  west.push_back(
      {Road::West, Road::North, 1, 1, TurnKind::Left, {arc(inner_entry, 0.0, h + inner, kPi / 2)}});
  add_rotated_paths(layout, west, r);
}

void build_three_way_1l(IntersectionLayout& layout, const LayoutParams& p, const Resolved& r) {
  const double zl = p.zone_length.value_or(7.2);
  const double zw = p.zone_width.value_or(3.6);
  if (zl <= 0.0 || zw <= 0.0) throw LayoutError("zone dimensions must be positive");
  if (zl < zw) throw LayoutError("zone_length must not be shorter than zone_width");
  const double o = zw / 2.0;
  const double left_r = p.left_turn_radius.value_or(zl + o);
  if (std::abs(left_r - (zl + o)) > 1e-9)
    throw LayoutError("left_turn_radius must equal zone_length + zone_width/2");
  layout.conflict_zones = {rect_zone(1, -zl, -zw, 0, 0), rect_zone(2, 0, -zw, zl, 0),
                           rect_zone(3, -zl / 2, 0, zl / 2, zw)};
  LaneBook book;
  for (Road road : {Road::East, Road::South, Road::West}) {
    book.add(layout, road, LaneDirection::Incoming, 0, r.lane_width);
    book.add(layout, road, LaneDirection::Outgoing, 0, r.lane_width);
  }
  const Vec2 w_in{-zl, -o};
  const Vec2 e_in{zl, o};
  const Vec2 s_in{o, -zl};
  std::vector<PathSketch> sketches;
  sketches.push_back({Road::West, Road::East, 0, 0, TurnKind::Straight, {straight(w_in, {zl, -o})}});
  sketches.push_back({Road::West, Road::South, 0, 0, TurnKind::Right,
                      {straight(w_in, {-zw, -o}), arc({-zw, -o}, 0.0, o, -kPi / 2),
                       straight({-o, -zw}, {-o, -zl})}});
  sketches.push_back({Road::East, Road::West, 0, 0, TurnKind::Straight, {straight(e_in, {-zl, o})}});
  sketches.push_back({Road::East, Road::South, 0, 0, TurnKind::Left, {arc(e_in, kPi, left_r, kPi / 2)}});
  sketches.push_back({Road::South, Road::East, 0, 0, TurnKind::Right,
                      {straight(s_in, {o, -zw}), arc({o, -zw}, kPi / 2, o, -kPi / 2),
                       straight({zw, -o}, {zl, -o})}});
  sketches.push_back(
      {Road::South, Road::West, 0, 0, TurnKind::Left, {arc(s_in, kPi / 2, left_r, kPi / 2)}});
  for (const auto& sk : sketches) finish_path(layout, sk, r);
}

void build_roundabout(IntersectionLayout& layout, const LayoutParams& p, const Resolved& r) {
  const double rect_len = p.zone_length.value_or(5.2);
  const double rect_w = p.zone_width.value_or(3.2);
  const double sq = p.square_side.value_or(3.0);
  const double radius = p.ring_radius.value_or(10.0);
  if (rect_len <= 0.0 || rect_w <= 0.0 || sq <= 0.0 || radius <= 0.0)
    throw LayoutError("roundabout dimensions must be positive");
  const double offset = r.lane_width / 2.0;
  if (offset >= radius) throw LayoutError("ring_radius too small for the lane width");
  const double delta = std::asin(offset / radius);
  const double quarter = kPi / 2.0;
  const double rect_sweep = rect_len / radius;
  const double sq_sweep = sq / radius;
  if (rect_sweep + sq_sweep >= quarter - 2.0 * delta)
    throw LayoutError("roundabout zones do not fit between consecutive arms");

  const std::array<Road, 4> ccw{Road::South, Road::East, Road::North, Road::West};
  int zid = 1;
  for (Road road : ccw) {
    const double a = arm_angle(road);
    // Entrance rectangle starts where the entry lane joins the ring.
    const double rect_mid = a + delta + rect_sweep / 2.0;
    const double exit_next = a + quarter - delta;
    const double sq_mid = 0.5 * ((a + delta + rect_sweep) + exit_next);
    for (auto [mid, len, wid] : {std::tuple{rect_mid, rect_len, rect_w}, std::tuple{sq_mid, sq, sq}}) {
      ConflictZone z;
      z.id = zid++;
      z.center = {radius * std::cos(mid), radius * std::sin(mid)};
      z.length = len;
      z.width = wid;
      z.heading = wrap_angle(mid + kPi / 2.0);
      layout.conflict_zones.push_back(z);
    }
  }
  LaneBook book;
  for (Road road : {Road::North, Road::East, Road::South, Road::West}) {
    book.add(layout, road, LaneDirection::Incoming, 0, r.lane_width);
    book.add(layout, road, LaneDirection::Outgoing, 0, r.lane_width);
  }
  constexpr double kLead = 1.0;
  for (int i = 0; i < 4; ++i) {
    const Road entry = ccw[i];
    const double a = arm_angle(entry);
    const Vec2 join{radius * std::cos(a + delta), radius * std::sin(a + delta)};
    const double inbound = a + kPi;
    const Vec2 lead_start{join.x - kLead * std::cos(inbound), join.y - kLead * std::sin(inbound)};
    for (int k = 1; k <= 3; ++k) {
      const Road exit = ccw[(i + k) % 4];
      const double leave_angle = a + k * quarter - delta;
      const Vec2 leave{radius * std::cos(leave_angle), radius * std::sin(leave_angle)};
      const double outbound = a + k * quarter;
      const Vec2 lead_end{leave.x + kLead * std::cos(outbound), leave.y + kLead * std::sin(outbound)};
      PathSketch sk{entry, exit, 0, 0,
                    k == 1 ? TurnKind::RoundaboutExit1
                           : (k == 2 ? TurnKind::RoundaboutExit2 : TurnKind::RoundaboutExit3),
                    {straight(lead_start, join),
                     arc(join, a + delta + quarter, radius, leave_angle - (a + delta)),
                     straight(leave, lead_end)}};
      finish_path(layout, sk, r);
    }
  }
}

}  // namespace

std::string_view to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::FourWay1L: return "four-way-1L";
    case LayoutKind::ThreeWay1L: return "three-way-1L";
    case LayoutKind::Roundabout: return "roundabout";
    case LayoutKind::FourWay2L: return "four-way-2L";
  }
  return "?";
}

std::string_view to_string(Road road) {
  switch (road) {
    case Road::North: return "North";
    case Road::East: return "East";
    case Road::South: return "South";
    case Road::West: return "West";
  }
  return "?";
}

std::string_view to_string(TurnKind turn) {
  switch (turn) {
    case TurnKind::Straight: return "straight";
    case TurnKind::Left: return "left";
    case TurnKind::Right: return "right";
    case TurnKind::RoundaboutExit1: return "roundabout-exit-1";
    case TurnKind::RoundaboutExit2: return "roundabout-exit-2";
    case TurnKind::RoundaboutExit3: return "roundabout-exit-3";
  }
  return "?";
}

LayoutKind parse_layout_kind(std::string_view text) {
  for (auto k : {LayoutKind::FourWay1L, LayoutKind::ThreeWay1L, LayoutKind::Roundabout,
                 LayoutKind::FourWay2L}) {
    if (to_string(k) == text) return k;
  }
  throw LayoutError("unknown layout kind '" + std::string(text) + "'");
}

Road parse_road(std::string_view text) {
  for (auto r : {Road::North, Road::East, Road::South, Road::West}) {
    const auto name = to_string(r);
    if (name == text || (text.size() == 1 && text[0] == name[0])) return r;
  }
  throw LayoutError("unknown road '" + std::string(text) + "'");
}

bool ConflictZone::contains(Vec2 p) const {
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double along = dx * c + dy * s;
  const double across = -dx * s + dy * c;
  constexpr double tol = 1e-9;
  return std::abs(along) < length / 2.0 - tol && std::abs(across) < width / 2.0 - tol;
}

std::vector<Vec2> ConflictZone::corners() const {
  std::vector<Vec2> out;
  for (auto [u, w] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) {
    const Vec2 local{u * length / 2.0, w * width / 2.0};
    const Vec2 r = rotate(local, heading);
    out.push_back({center.x + r.x, center.y + r.y});
  }
  return out;
}

Vec2 PathSegment::point_at(double u) const {
  if (curvature == 0.0) {
    return {start.x + u * std::cos(heading), start.y + u * std::sin(heading)};
  }
  const double radius = 1.0 / curvature;  // signed
  const double th = heading + u * curvature;
  return {start.x + radius * (std::sin(th) - std::sin(heading)),
          start.y - radius * (std::cos(th) - std::cos(heading))};
}

double PathSegment::heading_at(double u) const { return heading + u * curvature; }

Vec2 Path::position_at(double s) const {
  const auto& first = geometry.front();
  if (s <= intersection_entry) {
    const double back = intersection_entry - s;
    return {first.start.x - back * std::cos(first.heading), first.start.y - back * std::sin(first.heading)};
  }
  double u = s - intersection_entry;
  for (const auto& seg : geometry) {
    if (u <= seg.length) return seg.point_at(u);
    u -= seg.length;
  }
  const auto& last = geometry.back();
  const Vec2 end = last.point_at(last.length);
  const double h = last.heading_at(last.length);
  return {end.x + u * std::cos(h), end.y + u * std::sin(h)};
}

const ZoneInterval* Path::interval_for(int zone) const {
  for (const auto& zi : zone_intervals) {
    if (zi.zone == zone) return &zi;
  }
  return nullptr;
}

const Path& IntersectionLayout::path_for(int entry_lane, int exit_lane) const {
  for (const auto& p : paths) {
    if (p.entry_lane == entry_lane && p.exit_lane == exit_lane) return p;
  }
  throw LayoutError("no path from lane " + std::to_string(entry_lane) + " to lane " +
                    std::to_string(exit_lane));
}

const Path& IntersectionLayout::path_for(Road entry, Road exit) const {
  for (const auto& p : paths) {
    if (p.entry_road == entry && p.exit_road == exit) return p;
  }
  throw LayoutError("no path from " + std::string(to_string(entry)) + " to " +
                    std::string(to_string(exit)));
}

const Path& IntersectionLayout::path(int id) const {
  if (id < 0 || id >= static_cast<int>(paths.size())) throw LayoutError("unknown path id");
  return paths[id];
}

const Lane& IntersectionLayout::lane(int id) const {
  if (id < 0 || id >= static_cast<int>(lanes.size())) throw LayoutError("unknown lane id");
  return lanes[id];
}

const ConflictZone& IntersectionLayout::zone(int id) const {
  for (const auto& z : conflict_zones) {
    if (z.id == id) return z;
  }
  throw LayoutError("unknown zone id");
}

const NegotiationZone& IntersectionLayout::negotiation_zone(int lane_id) const {
  for (const auto& nz : negotiation_zones) {
    if (nz.lane == lane_id) return nz;
  }
  throw LayoutError("lane has no negotiation zone");
}

std::vector<Road> IntersectionLayout::incoming_roads() const {
  std::vector<Road> roads;
  for (const auto& l : lanes) {
    if (l.direction == LaneDirection::Incoming &&
        std::find(roads.begin(), roads.end(), l.road) == roads.end())
      roads.push_back(l.road);
  }
  return roads;
}

std::vector<const Path*> IntersectionLayout::paths_from(Road entry) const {
  std::vector<const Path*> out;
  for (const auto& p : paths) {
    if (p.entry_road == entry) out.push_back(&p);
  }
  return out;
}

std::vector<int> IntersectionLayout::incoming_lanes() const {
  std::vector<int> out;
  for (const auto& l : lanes) {
    if (l.direction == LaneDirection::Incoming) out.push_back(l.id);
  }
  return out;
}

bool IntersectionLayout::is_priority_road(Road road) const {
  if (kind == LayoutKind::Roundabout) return false;
  return road == Road::East || road == Road::West;
}

IntersectionLayout build_layout(LayoutKind kind, const LayoutParams& params) {
  const Resolved r = resolve_common(kind, params);
  IntersectionLayout layout;
  layout.kind = kind;
  layout.approach_length = r.approach;
  layout.v_max = r.v_max;
  layout.v_max_turn = r.v_max_turn;
  switch (kind) {
    case LayoutKind::FourWay1L: build_four_way_1l(layout, params, r); break;
    case LayoutKind::ThreeWay1L: build_three_way_1l(layout, params, r); break;
    case LayoutKind::Roundabout: build_roundabout(layout, params, r); break;
    case LayoutKind::FourWay2L: build_four_way_2l(layout, params, r); break;
  }
  for (size_t i = 0; i < layout.conflict_zones.size(); ++i) {
    const auto& z = layout.conflict_zones[i];
    if (z.length <= 0.0 || z.width <= 0.0) throw LayoutError("zone dimensions must be positive");
    for (size_t j = i + 1; j < layout.conflict_zones.size(); ++j) {
      if (zones_overlap(z, layout.conflict_zones[j]))
        throw LayoutError("conflict zones " + std::to_string(z.id) + " and " +
                          std::to_string(layout.conflict_zones[j].id) + " overlap");
    }
  }
  layout.min_negotiation_distance = min_negotiation_distance(r.hold_speed, r.braking);
  for (const auto& lane : layout.lanes) {
    if (lane.direction != LaneDirection::Incoming) continue;
    NegotiationZone nz;
    nz.lane = lane.id;
    nz.start_pos = r.approach;  // roads are 2L long, negotiation starts L before the junction
    nz.length = r.neg_length;
    nz.hold_speed = r.hold_speed;
    if (nz.start_pos + nz.length + layout.min_negotiation_distance > nz.start_pos + r.approach + 1e-9)
      throw LayoutError("negotiation_length leaves less than the minimum negotiation distance");
    layout.negotiation_zones.push_back(nz);
  }
  return layout;
}

double min_negotiation_distance(double v_neg, double braking_decel) {
  if (braking_decel <= 0.0) throw std::invalid_argument("braking deceleration must be positive");
  if (v_neg < 0.0) throw std::invalid_argument("speed must be non-negative");
  return v_neg * v_neg / (2.0 * braking_decel);
}

double max_negotiation_speed(double distance, double braking_decel) {
  if (braking_decel <= 0.0) throw std::invalid_argument("braking deceleration must be positive");
  if (distance < 0.0) throw std::invalid_argument("distance must be non-negative");
  return std::sqrt(2.0 * braking_decel * distance);
}

double min_negotiation_length(double v_neg, double t_neg_max) {
  if (v_neg < 0.0 || t_neg_max < 0.0) throw std::invalid_argument("arguments must be non-negative");
  return v_neg * t_neg_max;
}

}  // namespace moveover
