#include "moveover/planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace moveover {

namespace {

constexpr double kEps = 1e-9;

// Accumulates breakpoints of a piecewise-constant-acceleration profile.
class Builder {
 public:
  Builder(double t, double s, double v) { pts_.push_back({t, s, v}); }

  const Waypoint& cur() const { return pts_.back(); }

  void cruise_to(double s_target) {
    const auto c = cur();
    const double d = s_target - c.s;
    if (d <= kEps) return;
    if (c.v <= kEps) throw PlannerError("cannot cruise at zero speed");
    pts_.push_back({c.t + d / c.v, s_target, c.v});
  }

  // Change speed toward `v_target` at rate |a|, stopping early at `s_limit`.
  void ramp_to(double v_target, double a, double s_limit) {
    const auto c = cur();
    if (std::abs(v_target - c.v) <= kEps || s_limit - c.s <= kEps) return;
    a = v_target > c.v ? std::abs(a) : -std::abs(a);
    const double dist = (v_target * v_target - c.v * c.v) / (2.0 * a);
    if (dist <= s_limit - c.s) {
      pts_.push_back({c.t + (v_target - c.v) / a, c.s + dist, v_target});
      return;
    }
    const double d = s_limit - c.s;
    const double v1 = std::sqrt(std::max(0.0, c.v * c.v + 2.0 * a * d));
    pts_.push_back({c.t + (v1 - c.v) / a, s_limit, v1});
  }

  MobilityProfile finish(double t_int_pos) const {
    MobilityProfile p;
    p.waypoints = pts_;
    p.t_start = pts_.front().t;
    p.t_end = pts_.back().t;
    p.t_int = p.time_at(std::clamp(t_int_pos, pts_.front().s, pts_.back().s));
    return p;
  }

 private:
  std::vector<Waypoint> pts_;
};

struct Geometry {
  double l_neg;
  double s_int;
  double s_first;  // first zone entry
  double s_end;    // last zone exit + vehicle length
  bool turn;
  double v_cap_after_int;
};

Geometry geometry_of(const VehicleParams& vp, const Path& path, const NegotiationZone& nz) {
  Geometry g{};
  g.l_neg = nz.length;
  g.s_int = path.intersection_entry;
  if (path.zone_intervals.empty()) throw PlannerError("path has no conflict zones");
  g.s_first = path.zone_intervals.front().enter;
  g.s_end = path.zone_intervals.back().exit + vp.length;
  g.turn = is_turn(path.turn);
  g.v_cap_after_int = g.turn ? vp.v_max_turn : vp.v_max;
  if (g.l_neg > g.s_int) throw PlannerError("negotiation zone extends into the intersection");
  return g;
}

// Fastest continuation from the builder's current state to the end of the profile.
void free_tail(Builder& b, const VehicleParams& vp, const Geometry& g) {
  const double a = vp.a_max;
  const double brake = -vp.b_max;
  if (!g.turn) {
    b.ramp_to(vp.v_max, a, g.s_end);
    b.cruise_to(g.s_end);
    return;
  }
  const double vt = vp.v_max_turn;
  if (b.cur().s < g.s_int - kEps) {
    const double v = b.cur().v;
    const double d = g.s_int - b.cur().s;
    if (v > vt && (v * v - vt * vt) / (2.0 * brake) > d + 1e-6) {
      throw PlannerError("turn speed unreachable: braking distance exceeds the approach");
    }
    if (v < vt && (vt * vt - v * v) / (2.0 * a) >= d) {
      b.ramp_to(vt, a, g.s_int);
    } else {
      double vp2 = (d + v * v / (2.0 * a) + vt * vt / (2.0 * brake)) / (1.0 / (2.0 * a) + 1.0 / (2.0 * brake));
      double peak = std::min(std::sqrt(std::max(vp2, 0.0)), vp.v_max);
      peak = std::max(peak, std::max(v, vt));
      b.ramp_to(peak, a, g.s_int);
      const double d_down = (peak * peak - vt * vt) / (2.0 * brake);
      b.cruise_to(std::max(b.cur().s, g.s_int - d_down));
      b.ramp_to(vt, brake, g.s_int);
      b.cruise_to(g.s_int);
    }
  }
  b.ramp_to(std::max(vt, 0.0), a, g.s_end);
  if (b.cur().v > vt + kEps) throw PlannerError("turn speed exceeded after intersection entry");
  b.cruise_to(g.s_end);
}

Builder start(double t0, double v0, const Geometry& g) {
  Builder b(t0, 0.0, v0);
  b.cruise_to(g.l_neg);
  return b;
}

// Stage 1: hold v0 for an extra distance x before the free continuation.
std::optional<MobilityProfile> stage_postpone(const VehicleParams& vp, const Geometry& g, double t0,
                                              double v0, double x) {
  try {
    Builder b = start(t0, v0, g);
    b.cruise_to(g.l_neg + x);
    free_tail(b, vp, g);
    return b.finish(g.s_int);
  } catch (const PlannerError&) {
    return std::nullopt;
  }
}

double stage_postpone_limit(const VehicleParams& vp, const Geometry& g, double v0) {
  if (!g.turn) return g.s_end - g.l_neg;
  const double vt = vp.v_max_turn;
  const double need = v0 > vt ? (v0 * v0 - vt * vt) / (2.0 * -vp.b_max) : 0.0;
  return std::max(0.0, g.s_int - g.l_neg - need);
}

// Stage 2: brake to a lower cruise speed, hold it up to the intersection and
// continue freely from there.
std::optional<MobilityProfile> stage_cruise(const VehicleParams& vp, const Geometry& g, double t0,
                                            double v0, double vc) {
  try {
    const double brake = -vp.b_max;
    Builder b = start(t0, v0, g);
    b.ramp_to(vc, brake, g.s_int);
    if (b.cur().v > vc + 1e-6) return std::nullopt;
    if (g.turn && vc > vp.v_max_turn) {
      const double vt = vp.v_max_turn;
      const double d_down = (vc * vc - vt * vt) / (2.0 * brake);
      if (b.cur().s > g.s_int - d_down + 1e-6) return std::nullopt;
      b.cruise_to(g.s_int - d_down);
      b.ramp_to(vt, brake, g.s_int);
    }
    b.cruise_to(g.s_int);
    free_tail(b, vp, g);
    return b.finish(g.s_int);
  } catch (const PlannerError&) {
    return std::nullopt;
  }
}

// Stage 3: brake to vc, cruise, then accelerate so the intersection is entered
// at the free speed (v_max, or the turn speed on turns).
std::optional<MobilityProfile> stage_dip(const VehicleParams& vp, const Geometry& g, double t0,
                                         double v0, double vc) {
  try {
    const double a = vp.a_max;
    const double brake = -vp.b_max;
    const double vf = g.turn ? vp.v_max_turn : vp.v_max;
    if (vc > std::min(v0, vf) + kEps) return std::nullopt;
    const double d1 = (v0 * v0 - vc * vc) / (2.0 * brake);
    const double d2 = (vf * vf - vc * vc) / (2.0 * a);
    if (g.l_neg + d1 + d2 > g.s_int + 1e-6) return std::nullopt;
    Builder b = start(t0, v0, g);
    b.ramp_to(vc, brake, g.s_int);
    b.cruise_to(g.s_int - d2);
    b.ramp_to(vf, a, g.s_int);
    free_tail(b, vp, g);
    return b.finish(g.s_int);
  } catch (const PlannerError&) {
    return std::nullopt;
  }
}

double stage_dip_floor(const VehicleParams& vp, const Geometry& g, double v0) {
  // Smallest cruise speed whose brake + accelerate distances fit in the approach.
  const double a = vp.a_max;
  const double brake = -vp.b_max;
  const double vf = g.turn ? vp.v_max_turn : vp.v_max;
  const double room = g.s_int - g.l_neg;
  const double num = v0 * v0 / (2.0 * brake) + vf * vf / (2.0 * a) - room;
  const double den = 1.0 / (2.0 * brake) + 1.0 / (2.0 * a);
  return num <= 0.0 ? 0.0 : std::sqrt(num / den);
}

using Family = std::function<std::optional<MobilityProfile>(double)>;

double arrival(const MobilityProfile& p, double s_first) { return p.time_at(s_first); }

// Finds the family member whose first-zone entry is T (never earlier, within
// the bisection tolerance). `increasing` tells how arrival moves with the parameter.
std::optional<MobilityProfile> solve_family(const Family& family, double lo, double hi, bool increasing,
                                            double s_first, double T) {
  if (hi < lo) return std::nullopt;
  auto lo_p = family(lo);
  auto hi_p = family(hi);
  if (!lo_p || !hi_p) return std::nullopt;
  const double f_lo = arrival(*lo_p, s_first);
  const double f_hi = arrival(*hi_p, s_first);
  const double f_min = std::min(f_lo, f_hi);
  const double f_max = std::max(f_lo, f_hi);
  if (T < f_min - kWindowTolerance || T > f_max + 1e-9) return std::nullopt;
  if (std::abs((increasing ? f_lo : f_hi) - T) <= 1e-4) return increasing ? lo_p : hi_p;
  // Keep `late` on the side whose arrival is >= T.
  double early = increasing ? lo : hi;
  double late = increasing ? hi : lo;
  auto late_p = increasing ? hi_p : lo_p;
  for (int i = 0; i < 100 && std::abs(late - early) > 1e-7; ++i) {
    const double mid = 0.5 * (early + late);
    auto p = family(mid);
    if (!p) {
      late = mid;
      continue;
    }
    const double f = arrival(*p, s_first);
    if (f >= T) {
      late = mid;
      late_p = p;
      if (f - T <= 1e-4) break;
    } else {
      early = mid;
    }
  }
  return late_p;
}

std::vector<double> uniform_grid(double a, double b, int n) {
  std::vector<double> out;
  for (int k = 1; k <= n; ++k) out.push_back(a + (b - a) * k / (n + 1));
  return out;
}

// Adds time-uniform samples between breakpoints up to the waypoint budget.
MobilityProfile densify(const MobilityProfile& coarse) {
  const auto& bp = coarse.waypoints;
  if (static_cast<int>(bp.size()) >= kMaxWaypoints) return coarse;
  const int extra = kMaxWaypoints - static_cast<int>(bp.size());
  std::vector<Waypoint> out = bp;
  for (double t : uniform_grid(coarse.t_start, coarse.t_end, extra)) {
    bool near = false;
    for (const auto& w : bp) near = near || std::abs(w.t - t) < 2e-3;
    if (near) continue;
    out.push_back({t, coarse.position(t), coarse.speed(t)});
  }
  std::sort(out.begin(), out.end(), [](const Waypoint& x, const Waypoint& y) { return x.t < y.t; });
  MobilityProfile p = coarse;
  p.waypoints = std::move(out);
  return p;
}

}  // namespace

void VehicleParams::validate() const {
  if (!(a_max > 0.0)) throw PlannerError("a_max must be positive");
  if (!(b_max < 0.0)) throw PlannerError("b_max must be negative");
  if (!(v_min > 0.0 && v_min < v_max_turn && v_max_turn <= v_max))
    throw PlannerError("speeds must satisfy 0 < v_min < v_max_turn <= v_max");
  if (!(length > 0.0) || !(width > 0.0)) throw PlannerError("vehicle dimensions must be positive");
}

namespace {
size_t segment_index(const std::vector<Waypoint>& w, double t) {
  auto it = std::upper_bound(w.begin(), w.end(), t,
                             [](double x, const Waypoint& p) { return x < p.t; });
  if (it == w.begin()) return 0;
  return std::min<size_t>(static_cast<size_t>(it - w.begin()) - 1, w.size() - 2);
}
}  // namespace

double MobilityProfile::position(double t) const {
  const auto& w = waypoints;
  if (t <= w.front().t) return w.front().s - w.front().v * (w.front().t - t);
  if (t >= w.back().t) return w.back().s + w.back().v * (t - w.back().t);
  const size_t i = segment_index(w, t);
  const double dt = w[i + 1].t - w[i].t;
  const double a = (w[i + 1].v - w[i].v) / dt;
  const double tau = t - w[i].t;
  return w[i].s + w[i].v * tau + 0.5 * a * tau * tau;
}

double MobilityProfile::speed(double t) const {
  const auto& w = waypoints;
  if (t <= w.front().t) return w.front().v;
  if (t >= w.back().t) return w.back().v;
  const size_t i = segment_index(w, t);
  const double dt = w[i + 1].t - w[i].t;
  return w[i].v + (w[i + 1].v - w[i].v) * (t - w[i].t) / dt;
}

double MobilityProfile::acceleration(double t) const {
  const auto& w = waypoints;
  if (t < w.front().t || t >= w.back().t) return 0.0;
  const size_t i = segment_index(w, t);
  return (w[i + 1].v - w[i].v) / (w[i + 1].t - w[i].t);
}

double MobilityProfile::time_at(double s) const {
  const auto& w = waypoints;
  if (w.empty()) throw PlannerError("empty profile");
  if (s < w.front().s - 1e-9 || s > w.back().s + 1e-6)
    throw PlannerError("position outside the profile span");
  if (s <= w.front().s) return w.front().t;
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    if (s > w[i + 1].s) continue;
    const double ds = s - w[i].s;
    if (ds <= 0.0) return w[i].t;
    const double dt = w[i + 1].t - w[i].t;
    const double a = (w[i + 1].v - w[i].v) / dt;
    const double disc = std::max(0.0, w[i].v * w[i].v + 2.0 * a * ds);
    const double denom = w[i].v + std::sqrt(disc);
    if (denom <= 0.0) continue;
    return w[i].t + std::min(dt, 2.0 * ds / denom);
  }
  return w.back().t;
}

std::vector<ZoneTime> profile_zone_times(const MobilityProfile& profile, const Path& path,
                                         double vehicle_length) {
  std::vector<ZoneTime> out;
  for (const auto& zi : path.zone_intervals) {
    if (zi.enter < profile.start_position() - 1e-9 ||
        zi.exit + vehicle_length > profile.end_position() + 1e-6)
      throw PlannerError("profile does not span zone " + std::to_string(zi.zone));
    out.push_back({zi.zone, profile.time_at(zi.enter), profile.time_at(zi.exit + vehicle_length)});
  }
  return out;
}

MobilityProfile propose_profile(const VehicleParams& params, const Path& path, double t0, double v0,
                                const NegotiationZone& neg_zone) {
  params.validate();
  if (!(v0 > 0.0)) throw PlannerError("initial speed must be positive");
  if (v0 > params.v_max + 1e-9) throw PlannerError("initial speed above v_max");
  const Geometry g = geometry_of(params, path, neg_zone);
  Builder b = start(t0, v0, g);
  free_tail(b, params, g);
  return densify(b.finish(g.s_int));
}

bool windows_satisfied(const std::vector<ZoneTime>& times, const std::vector<ZoneWindow>& windows,
                       double tol) {
  for (const auto& w : windows) {
    for (const auto& zt : times) {
      if (zt.zone != w.zone) continue;
      if (zt.t_enter < w.t_enter_min - tol) return false;
      if (zt.t_exit > w.t_exit_max + tol) return false;
    }
  }
  return true;
}

ReplanResult replan_profile(const VehicleParams& params, const Path& path, double t0, double v0,
                            const NegotiationZone& neg_zone, const std::vector<ZoneWindow>& windows) {
  ReplanResult result;
  const MobilityProfile proposal = propose_profile(params, path, t0, v0, neg_zone);
  const double len = params.length;
  if (windows_satisfied(profile_zone_times(proposal, path, len), windows)) {
    result.status = ReplanStatus::Feasible;
    result.profile = proposal;
    result.stage = 0;
    return result;
  }
  const Geometry g = geometry_of(params, path, neg_zone);
  const double unconstrained = proposal.time_at(g.s_first);
  double first_min = unconstrained;
  if (!windows.empty()) {
    for (const auto& w : windows) {
      if (w.zone == path.zone_intervals.front().zone) first_min = std::max(first_min, w.t_enter_min);
    }
  }

  struct Stage {
    int id;
    Family family;
    double lo, hi;
    bool increasing;
  };
  const double vc_top = v0;
  const double dip_top = std::min(v0, g.turn ? params.v_max_turn : params.v_max);
  const std::vector<Stage> stages{
      {1, [&](double x) { return stage_postpone(params, g, t0, v0, x); }, 0.0,
       stage_postpone_limit(params, g, v0), true},
      {2, [&](double vc) { return stage_cruise(params, g, t0, v0, vc); }, params.v_min, vc_top, false},
      {3, [&](double vc) { return stage_dip(params, g, t0, v0, vc); },
       std::max(params.v_min, stage_dip_floor(params, g, v0)), dip_top, false},
  };

  for (const auto& st : stages) {
    double T = first_min;
    for (int iter = 0; iter < 60; ++iter) {
      auto p = solve_family(st.family, st.lo, st.hi, st.increasing, g.s_first, T);
      if (!p) break;
      const auto times = profile_zone_times(*p, path, len);
      double raise = 0.0;
      bool exit_violated = false;
      for (const auto& w : windows) {
        for (const auto& zt : times) {
          if (zt.zone != w.zone) continue;
          if (zt.t_enter < w.t_enter_min - kWindowTolerance)
            raise = std::max(raise, w.t_enter_min - zt.t_enter);
          if (zt.t_exit > w.t_exit_max + kWindowTolerance) exit_violated = true;
        }
      }
      if (raise > 0.0) {
        T = p->time_at(g.s_first) + raise;
        continue;
      }
      if (exit_violated) break;
      result.status = ReplanStatus::Feasible;
      result.profile = densify(*p);
      result.stage = st.id;
      return result;
    }
  }

  // Fallback: honour only the first entry time.
  for (const auto& st : stages) {
    if (st.id == 3) continue;
    auto p = solve_family(st.family, st.lo, st.hi, st.increasing, g.s_first, first_min);
    if (p) {
      result.status = ReplanStatus::Fallback;
      result.profile = densify(*p);
      result.stage = st.id;
      return result;
    }
  }
  result.status = ReplanStatus::Infeasible;
  return result;
}

std::vector<std::string> validate_profile(const MobilityProfile& profile, const VehicleParams& params,
                                          const Path& path, const NegotiationZone& neg_zone) {
  std::vector<std::string> issues;
  const auto& w = profile.waypoints;
  auto report = [&](size_t i, const std::string& what) {
    std::ostringstream os;
    os << "waypoint " << i << ": " << what;
    issues.push_back(os.str());
  };
  if (w.size() < 2) {
    issues.push_back("fewer than two waypoints");
    return issues;
  }
  if (static_cast<int>(w.size()) > kMaxWaypoints) issues.push_back("more than 40 waypoints");
  const double tol_v = 1e-6;
  const bool turn = is_turn(path.turn);
  const double hold_v = w.front().v;
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i].v < -tol_v) report(i, "negative speed");
    if (w[i].v > params.v_max + tol_v) report(i, "speed above v_max");
    if (turn && w[i].t >= profile.t_int - 1e-9 && w[i].v > params.v_max_turn + tol_v)
      report(i, "speed above turn limit after intersection entry");
    if (w[i].s <= neg_zone.length + 1e-9 && std::abs(w[i].v - hold_v) > tol_v)
      report(i, "speed changes inside the negotiation zone");
    if (i == 0) continue;
    const double dt = w[i].t - w[i - 1].t;
    if (!(dt > 0.0)) {
      report(i, "time not strictly increasing");
      continue;
    }
    if (w[i].s < w[i - 1].s - 1e-9) report(i, "position decreases");
    const double a = (w[i].v - w[i - 1].v) / dt;
    if (a > params.a_max + 1e-6 || a < params.b_max - 1e-6) report(i, "acceleration out of bounds");
    const double ds = 0.5 * (w[i].v + w[i - 1].v) * dt;
    if (std::abs(w[i - 1].s + ds - w[i].s) > 0.01) report(i, "position inconsistent with speeds");
  }
  return issues;
}

}  // namespace moveover
