#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "moveover/metrics.hpp"
#include "moveover/simulator.hpp"

using namespace moveover;

namespace {

ScenarioConfig scenario(LayoutKind layout, Method method, double rate, double duration, std::uint64_t seed = 1) {
  ScenarioConfig c;
  c.layout = layout;
  c.method = method;
  c.rate = rate;
  c.duration = duration;
  c.seed = seed;
  return c;
}

double mean_travel(const RunMetrics& m, bool (*keep)(const VehicleRecord&)) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : m.vehicles)
    if (v.completed && keep(v)) {
      sum += v.travel_time;
      ++n;
    }
  return n ? sum / n : 0.0;
}

}  // namespace

TEST_CASE("free road accelerates at a_max") {
  FollowingParams p;
  CHECK(car_following_accel(std::nullopt, 0.0, 5.0, 13.9, p, 0.1) == doctest::Approx(p.a_max));
}

TEST_CASE("stopped leader forces at least the closed-form stopping deceleration") {
  FollowingParams p;
  // 10 m to a stopped leader at 10 m/s: stopping within 10 - min_gap needs
  // v^2 / (2 d).
  const Leader lead{10.0, 0.0, p.min_gap};
  const double a = car_following_accel(lead, 0.0, 10.0, 13.9, p, 0.1);
  CHECK(a <= -100.0 / (2.0 * (10.0 - p.min_gap)));
  CHECK(a >= -p.emergency_decel);
}

TEST_CASE("equal speeds with a large gap hold speed") {
  FollowingParams p;
  const Leader lead{200.0, 10.0, p.min_gap};
  CHECK(car_following_accel(lead, 0.0, 10.0, 10.0, p, 0.1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("safe speed stops in the available distance after the reaction time") {
  const double b = 4.5, dt = 0.1;
  for (double tau : {0.0, 0.5, 1.0}) {
    for (double gap : {3.0, 10.0, 40.0}) {
      for (double vl : {0.0, 5.0, 12.0}) {
        const double v = 8.0;
        const double vs = safe_speed(gap, vl, v, b, dt, tau);
        const double t = std::max(tau, dt / 2.0);
        // Distance covered reacting then braking equals what the leader leaves.
        CHECK(vs * t + vs * vs / (2.0 * b) == doctest::Approx(gap + vl * vl / (2.0 * b) - v * dt / 2.0));
      }
    }
  }
  CHECK(safe_speed(0.0, 0.0, 5.0, 4.5, 0.1) == 0.0);
}

TEST_CASE("zero arrival rate gives an empty run") {
  const RunOutput r = run(scenario(LayoutKind::FourWay1L, Method::Moveover, 0.0, 60.0));
  CHECK(r.metrics.spawned == 0);
  CHECK(r.metrics.vehicles.empty());
  CHECK(r.metrics.backups.empty());
}

TEST_CASE("same config and seed give identical outputs") {
  ScenarioConfig c = scenario(LayoutKind::FourWay1L, Method::Moveover, 0.15, 300.0, 7);
  c.network = DelayModel::four_g();
  c.event_log = true;
  const RunOutput a = run(c), b = run(c);
  CHECK(vehicles_csv(a.metrics) == vehicles_csv(b.metrics));
  CHECK(events_csv(a.events) == events_csv(b.events));
  CHECK(summary_json(a.metrics, "x") == summary_json(b.metrics, "x"));
  c.seed = 8;
  CHECK(vehicles_csv(run(c).metrics) != vehicles_csv(a.metrics));
}

TEST_CASE("moveover at low density keeps vehicles moving without backups") {
  const RunOutput r = run(scenario(LayoutKind::FourWay1L, Method::Moveover, 0.1, 600.0));
  const auto& m = r.metrics;
  CHECK(m.safety.clean());
  CHECK(m.safety.max_tracking_error <= 0.1);
  CHECK(m.backups.empty());
  int done = 0, moving = 0;
  for (const auto& v : m.vehicles) {
    if (!v.completed) continue;
    ++done;
    moving += v.min_speed >= 1.0 - 1e-9;
    CHECK(v.travel_time > 0.0);
    CHECK(v.messages % 2 == 0);
  }
  REQUIRE(done > 100);
  CHECK(moving >= 0.95 * done);
  // Nothing to negotiate against most of the time: the first proposal stands.
  const auto h = message_histogram(m);
  CHECK(h.begin()->first == 2);
}

TEST_CASE("traffic light: a lone vehicle crosses on green and stops on red") {
  // Axis West/East starts green; a vehicle departing early reaches the line
  // well inside the 35 s green. North/South starts red for 38 s.
  bool seen_green = false, seen_red = false;
  for (std::uint64_t seed = 1; seed < 400 && !(seen_green && seen_red); ++seed) {
    const RunOutput r = run(scenario(LayoutKind::FourWay1L, Method::TrafficLight, 0.004, 80.0, seed));
    if (r.metrics.spawned != 1) continue;
    const VehicleRecord& v = r.metrics.vehicles.front();
    if (v.depart > 15.0) continue;
    const bool axis_a = v.entry_road == "West" || v.entry_road == "East";
    if (axis_a) {
      CHECK(v.stops == 0);
      seen_green = true;
    } else {
      CHECK(v.stops >= 1);
      seen_red = true;
    }
  }
  CHECK(seen_green);
  CHECK(seen_red);
}

TEST_CASE("priority: minor roads wait for the major stream") {
  const RunOutput r = run(scenario(LayoutKind::FourWay1L, Method::Priority, 0.08, 1200.0));
  CHECK(r.metrics.safety.clean());
  const double major = mean_travel(r.metrics, [](const VehicleRecord& v) {
    return v.entry_road == "West" || v.entry_road == "East";
  });
  const double minor = mean_travel(r.metrics, [](const VehicleRecord& v) {
    return v.entry_road == "North" || v.entry_road == "South";
  });
  CHECK(minor > major);
}

TEST_CASE("baselines stay collision free on every layout they apply to") {
  for (LayoutKind k : {LayoutKind::FourWay1L, LayoutKind::ThreeWay1L, LayoutKind::Roundabout, LayoutKind::FourWay2L}) {
    for (Method m : {Method::Priority, Method::TrafficLight, Method::Fifo}) {
      if (k == LayoutKind::Roundabout && m != Method::Priority) continue;
      const RunOutput r = run(scenario(k, m, 0.12, 400.0, 3));
      CAPTURE(to_string(k));
      CAPTURE(to_string(m));
      CHECK(r.metrics.safety.co_occupancy == 0);
      CHECK(r.metrics.safety.teleports == 0);
    }
  }
}

TEST_CASE("forced negotiation failures switch to backup and drain safely") {
  // An exchange cap of 2 turns every Revise into a failure.
  ScenarioConfig c = scenario(LayoutKind::FourWay1L, Method::Moveover, 0.06, 900.0, 2);
  c.controller.exchange_cap = 2;
  const RunOutput r = run(c);
  REQUIRE(!r.metrics.backups.empty());
  CHECK(r.metrics.safety.co_occupancy == 0);
  CHECK(r.metrics.safety.table_violations == 0);
  CHECK(r.metrics.backups.front().cause == "exchange-cap");
  // Backup ends once the intersection has cleared, and negotiation resumes.
  bool recovered = false;
  for (const auto& b : r.metrics.backups) recovered = recovered || b.t_end > b.t_start;
  CHECK(recovered);
  int negotiated_backup = 0;
  for (const auto& v : r.metrics.vehicles) negotiated_backup += v.backup;
  CHECK(negotiated_backup > 0);
}

TEST_CASE("config validation names the offending field") {
  ScenarioConfig c;
  c.duration = -1.0;
  CHECK_THROWS_WITH_AS(c.validate(), "duration: must be > 0", ConfigError);
  c = ScenarioConfig{};
  c.layout = LayoutKind::Roundabout;
  c.method = Method::TrafficLight;
  try {
    c.validate();
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "method");
  }
  c.method = Method::Fifo;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.method = Method::Priority;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("method names") {
  CHECK(parse_method("traffic-light") == Method::TrafficLight);
  CHECK(parse_method(to_string(Method::Fifo)) == Method::Fifo);
  CHECK_THROWS(parse_method("roundrobin"));
}
