#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "moveover/layout.hpp"

using namespace moveover;

namespace {

// Point-in-convex-polygon via edge cross products, independent from
// ConflictZone::contains.
bool inside_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  int sign = 0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (std::abs(cross) < 1e-9) return false;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

// Zones visited along the path, in order, by dense 1 cm sampling.
std::vector<int> sampled_zones(const IntersectionLayout& layout, const Path& path) {
  std::vector<int> order;
  for (double s = 0.0; s <= path.total_length; s += 0.01) {
    const Vec2 p = path.position_at(s);
    for (const auto& z : layout.conflict_zones) {
      if (inside_polygon(z.corners(), p) && (order.empty() || order.back() != z.id)) {
        order.push_back(z.id);
      }
    }
  }
  return order;
}

std::vector<int> interval_zones(const Path& path) {
  std::vector<int> out;
  for (const auto& zi : path.zone_intervals) out.push_back(zi.zone);
  return out;
}

}  // namespace

TEST_CASE("four-way single lane defaults") {
  const auto layout = build_layout(LayoutKind::FourWay1L);
  CHECK(layout.conflict_zones.size() == 4);
  for (const auto& z : layout.conflict_zones) {
    CHECK(z.length == doctest::Approx(7.2));
    CHECK(z.width == doctest::Approx(7.2));
  }
  CHECK(layout.approach_length == doctest::Approx(100.0));
  CHECK(layout.v_max == doctest::Approx(50.0 / 3.6));
  CHECK(layout.v_max_turn == doctest::Approx(20.0 / 3.6));
  CHECK(layout.paths.size() == 12);

  const auto& we = layout.path_for(Road::West, Road::East);
  CHECK(we.zone_intervals.size() == 2);
  CHECK(we.zone_intervals[0].enter == doctest::Approx(100.0));
  CHECK(we.zone_intervals[0].exit == doctest::Approx(107.2));
  CHECK(we.zone_intervals[1].exit == doctest::Approx(114.4));
  CHECK(interval_zones(we) == std::vector<int>{1, 2});
  CHECK(interval_zones(layout.path_for(Road::East, Road::West)) == std::vector<int>{3, 4});
  CHECK(interval_zones(layout.path_for(Road::South, Road::North)) == std::vector<int>{2, 3});
  CHECK(interval_zones(layout.path_for(Road::East, Road::North)) == std::vector<int>{3});

  for (const auto& p : layout.paths) {
    const size_t expected = p.turn == TurnKind::Right ? 1 : (p.turn == TurnKind::Straight ? 2 : 3);
    CHECK(p.zone_intervals.size() == expected);
  }
}

TEST_CASE("roundabout defaults") {
  const auto layout = build_layout(LayoutKind::Roundabout);
  CHECK(layout.conflict_zones.size() == 8);
  int rects = 0, squares = 0;
  for (const auto& z : layout.conflict_zones) {
    if (std::abs(z.length - 5.2) < 1e-9 && std::abs(z.width - 3.2) < 1e-9) ++rects;
    if (std::abs(z.length - 3.0) < 1e-9 && std::abs(z.width - 3.0) < 1e-9) ++squares;
  }
  CHECK(rects == 4);
  CHECK(squares == 4);
  CHECK(layout.v_max == doctest::Approx(23.0 / 3.6));
  CHECK(layout.paths.size() == 12);
  for (const auto& p : layout.paths) {
    size_t expected = 0;
    if (p.turn == TurnKind::RoundaboutExit1) expected = 2;
    if (p.turn == TurnKind::RoundaboutExit2) expected = 4;
    if (p.turn == TurnKind::RoundaboutExit3) expected = 6;
    CHECK(p.zone_intervals.size() == expected);
  }
  const auto& third = layout.path_for(Road::South, Road::West);
  CHECK(third.turn == TurnKind::RoundaboutExit3);
  CHECK(third.zone_intervals.size() == 6);
}

TEST_CASE("three-way single lane zone counts match geometric overlap") {
  const auto layout = build_layout(LayoutKind::ThreeWay1L);
  CHECK(layout.conflict_zones.size() == 3);
  CHECK(layout.paths.size() == 6);
  size_t fewest_straight = 100;
  for (const auto& p : layout.paths) {
    const auto oracle = sampled_zones(layout, p);
    CHECK(interval_zones(p) == oracle);
    if (p.turn == TurnKind::Straight) fewest_straight = std::min(fewest_straight, oracle.size());
  }
  CHECK(fewest_straight == 1);
  CHECK_THROWS_AS(layout.path_for(Road::North, Road::South), LayoutError);
}

TEST_CASE("four-way two lane defaults") {
  const auto layout = build_layout(LayoutKind::FourWay2L);
  CHECK(layout.conflict_zones.size() == 8);
  CHECK(layout.paths.size() == 12);
  for (const auto& p : layout.paths) {
    const size_t expected = p.turn == TurnKind::Right ? 1 : (p.turn == TurnKind::Left ? 2 : 3);
    CHECK(p.zone_intervals.size() == expected);
    const auto& in = layout.lane(p.entry_lane);
    CHECK(in.index == (p.turn == TurnKind::Left ? 1 : 0));
  }
}

TEST_CASE("every path: intervals match the sampling oracle and satisfy invariants") {
  for (auto kind : {LayoutKind::FourWay1L, LayoutKind::ThreeWay1L, LayoutKind::Roundabout,
                    LayoutKind::FourWay2L}) {
    const auto layout = build_layout(kind);
    std::set<std::pair<int, int>> pairs;
    for (const auto& p : layout.paths) {
      CAPTURE(to_string(kind));
      CAPTURE(p.id);
      CHECK(pairs.insert({p.entry_lane, p.exit_lane}).second);
      CHECK(interval_zones(p) == sampled_zones(layout, p));
      CHECK(p.zone_intervals.front().enter >= layout.approach_length - 1e-9);
      for (size_t i = 0; i < p.zone_intervals.size(); ++i) {
        const auto& zi = p.zone_intervals[i];
        CHECK(zi.enter < zi.exit);
        CHECK(zi.exit <= p.total_length);
        if (i > 0) CHECK(zi.enter >= p.zone_intervals[i - 1].exit - 1e-6);
        // Boundary points from the oracle agree within the 1 cm sampling step.
        const Vec2 mid = p.position_at(0.5 * (zi.enter + zi.exit));
        CHECK(inside_polygon(layout.zone(zi.zone).corners(), mid));
        CHECK_FALSE(inside_polygon(layout.zone(zi.zone).corners(), p.position_at(zi.enter - 0.01)));
        CHECK_FALSE(inside_polygon(layout.zone(zi.zone).corners(), p.position_at(zi.exit + 0.01)));
      }
    }
    // Zones do not overlap: no dense grid point lies in two zones.
    for (double x = -20; x <= 20; x += 0.1) {
      for (double y = -20; y <= 20; y += 0.1) {
        int hits = 0;
        for (const auto& z : layout.conflict_zones) hits += inside_polygon(z.corners(), {x, y});
        CHECK(hits <= 1);
      }
    }
  }
}

TEST_CASE("negotiation zone design helpers") {
  CHECK(min_negotiation_distance(13.889, 4.5) == doctest::Approx(21.43).epsilon(1e-3));
  CHECK(max_negotiation_speed(10.0, 4.5) == doctest::Approx(9.487).epsilon(1e-3));
  CHECK(max_negotiation_speed(10.0, 4.5) * 3.6 == doctest::Approx(34.2).epsilon(2e-3));
  CHECK(min_negotiation_length(13.889, 0.03) == doctest::Approx(0.417).epsilon(1e-3));
  CHECK(min_negotiation_length(13.889, 0.4) == doctest::Approx(5.556).epsilon(1e-3));
  CHECK_THROWS(min_negotiation_distance(10.0, 0.0));
  // Round trip: configured negotiation lengths fit inside the approach.
  const std::map<LayoutKind, std::pair<double, double>> lengths{
      {LayoutKind::FourWay1L, {2.0, 10.0}},
      {LayoutKind::ThreeWay1L, {2.0, 10.0}},
      {LayoutKind::Roundabout, {2.0, 7.5}},
      {LayoutKind::FourWay2L, {2.0, 17.0}}};
  for (const auto& [kind, l] : lengths) {
    for (double len : {0.0, l.first, l.second}) {
      LayoutParams p;
      p.negotiation_length = len;
      const auto layout = build_layout(kind, p);
      for (const auto& nz : layout.negotiation_zones) {
        CHECK(nz.length == len);
        CHECK(nz.length + min_negotiation_distance(nz.hold_speed, 4.5) <= layout.approach_length);
      }
    }
  }
  LayoutParams bad;
  bad.negotiation_length = 90.0;
  CHECK_THROWS_AS(build_layout(LayoutKind::FourWay1L, bad), LayoutError);
}

TEST_CASE("overrides and errors") {
  LayoutParams p;
  p.zone_side = 8.0;
  p.approach_length = 150.0;
  const auto layout = build_layout(LayoutKind::FourWay1L, p);
  CHECK(layout.path_for(Road::West, Road::East).zone_intervals[1].exit == doctest::Approx(166.0));
  LayoutParams neg;
  neg.zone_side = -1.0;
  CHECK_THROWS_AS(build_layout(LayoutKind::FourWay1L, neg), LayoutError);
  CHECK_THROWS_AS(parse_layout_kind("five-way"), LayoutError);
  CHECK(parse_layout_kind("roundabout") == LayoutKind::Roundabout);
  CHECK(parse_road("W") == Road::West);
  CHECK_THROWS_AS(layout.path_for(Road::West, Road::West), LayoutError);
}
