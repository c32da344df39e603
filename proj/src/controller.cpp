#include "moveover/controller.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace moveover {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOverlapTol = 1e-9;
// Slack on the following-gap target so profiles that reach it exactly pass.
constexpr double kGapTol = 0.01;
constexpr double kMinBodyGap = 1.0;
// Room left to the re-proposal when only the hardest braking reaches the gap.
constexpr double kGapSlack = 0.5;

bool overlaps(double a0, double a1, double b0, double b1) {
  return a0 < b1 - kOverlapTol && b0 < a1 - kOverlapTol;
}

// Exponential search followed by bisection for the smallest delay in
// [0, limit] with ok(delay) true; ok must be monotone.
template <typename Pred>
double minimal_delay(Pred ok, double tol = 1e-3, double limit = 600.0) {
  if (ok(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 0.5;
  while (!ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > limit) throw SchedulingError("no delay restores the required spacing");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) hi = mid; else lo = mid;
  }
  return hi;
}

}  // namespace

void ControllerParams::validate() const {
  if (safety_gap < 0.0 || safe_margin < 0.0) throw SchedulingError("gaps must be non-negative");
  if (widening < 0.0) throw SchedulingError("widening must be non-negative");
  if (braking <= 0.0) throw SchedulingError("braking must be positive");
  if (gap_dt <= 0.0) throw SchedulingError("gap_dt must be positive");
  if (exchange_cap < 2 || exchange_cap % 2 != 0) throw SchedulingError("exchange_cap must be even and >= 2");
  if (revise_pad < 0.0) throw SchedulingError("revise_pad must be non-negative");
}

double TableRow::last_exit() const {
  double m = -kInf;
  for (const auto& r : reservations) m = std::max(m, r.t_exit);
  return m;
}

TableRow make_row(int cav, const MobilityProfile& profile, const Path& path, double length,
                  double widening) {
  TableRow row;
  row.cav = cav;
  row.profile = profile;
  row.path_id = path.id;
  row.entry_road = path.entry_road;
  row.exit_road = path.exit_road;
  row.entry_lane = path.entry_lane;
  row.exit_lane = path.exit_lane;
  row.length = length;
  row.intersection_entry = path.intersection_entry;
  row.intersection_exit = path.intersection_exit;
  for (const auto& zt : profile_zone_times(profile, path, length)) {
    row.reservations.push_back({zt.zone, zt.t_enter - widening, zt.t_exit + widening});
  }
  return row;
}

void SchedulingTable::commit(TableRow row) {
  if (contains(row.cav)) throw SchedulingError("cav " + std::to_string(row.cav) + " already committed");
  for (const auto& r : row.reservations) {
    if (!(r.t_exit >= r.t_enter)) throw SchedulingError("reservation ends before it starts");
    auto it = index_.find(r.zone);
    if (it == index_.end()) continue;
    for (const auto& [other, c] : it->second) {
      if (overlaps(r.t_enter, r.t_exit, c.t_enter, c.t_exit)) {
        std::ostringstream os;
        os << "cav " << row.cav << " overlaps cav " << other << " in zone " << r.zone;
        throw SchedulingError(os.str());
      }
    }
  }
  for (const auto& r : row.reservations) {
    auto& v = index_[r.zone];
    v.emplace_back(row.cav, r);
    std::sort(v.begin(), v.end(),
              [](const auto& a, const auto& b) { return a.second.t_enter < b.second.t_enter; });
  }
  rows_.push_back(std::move(row));
}

void SchedulingTable::remove(int cav) {
  auto it = std::find_if(rows_.begin(), rows_.end(), [&](const TableRow& r) { return r.cav == cav; });
  if (it == rows_.end()) throw SchedulingError("unknown cav " + std::to_string(cav));
  rows_.erase(it);
  for (auto& [zone, v] : index_) {
    v.erase(std::remove_if(v.begin(), v.end(), [&](const auto& e) { return e.first == cav; }), v.end());
  }
}

void SchedulingTable::expire_rows(double now) {
  std::vector<int> gone;
  for (const auto& r : rows_) {
    if (now > r.last_exit()) gone.push_back(r.cav);
  }
  for (int cav : gone) remove(cav);
}

void SchedulingTable::release(int cav, int zone, double /*t_actual_exit*/) {
  auto it = std::find_if(rows_.begin(), rows_.end(), [&](const TableRow& r) { return r.cav == cav; });
  if (it == rows_.end()) throw SchedulingError("unknown cav " + std::to_string(cav));
  auto& res = it->reservations;
  res.erase(std::remove_if(res.begin(), res.end(), [&](const Reservation& r) { return r.zone == zone; }),
            res.end());
  auto& v = index_[zone];
  v.erase(std::remove_if(v.begin(), v.end(), [&](const auto& e) { return e.first == cav; }), v.end());
  if (res.empty()) remove(cav);
}

void SchedulingTable::clear() {
  rows_.clear();
  index_.clear();
}

bool SchedulingTable::contains(int cav) const {
  return std::any_of(rows_.begin(), rows_.end(), [&](const TableRow& r) { return r.cav == cav; });
}

const TableRow& SchedulingTable::row(int cav) const {
  for (const auto& r : rows_) {
    if (r.cav == cav) return r;
  }
  throw SchedulingError("unknown cav " + std::to_string(cav));
}

std::vector<Reservation> SchedulingTable::zone_reservations(int zone) const {
  std::vector<Reservation> out;
  auto it = index_.find(zone);
  if (it == index_.end()) return out;
  for (const auto& e : it->second) out.push_back(e.second);
  return out;
}

bool SchedulingTable::zones_disjoint() const {
  for (const auto& [zone, v] : index_) {
    for (size_t i = 0; i < v.size(); ++i) {
      for (size_t j = i + 1; j < v.size(); ++j) {
        if (overlaps(v[i].second.t_enter, v[i].second.t_exit, v[j].second.t_enter, v[j].second.t_exit))
          return false;
      }
    }
  }
  return true;
}

std::string SchedulingTable::to_csv(const IntersectionLayout& layout) const {
  std::ostringstream os;
  os << "cav_id,trajectory,entry_road,exit_road";
  for (const auto& z : layout.conflict_zones) os << ",entering_" << z.id << ",exiting_" << z.id;
  os << "\n";
  for (const auto& r : rows_) {
    os << r.cav << ",";
    if (!r.profile.waypoints.empty()) {
      os << r.profile.waypoints.size() << " waypoints " << r.profile.t_start << "-" << r.profile.t_end;
    }
    os << "," << to_string(r.entry_road) << "," << to_string(r.exit_road);
    for (const auto& z : layout.conflict_zones) {
      auto it = std::find_if(r.reservations.begin(), r.reservations.end(),
                             [&](const Reservation& x) { return x.zone == z.id; });
      if (it == r.reservations.end()) os << ",,";
      else os << "," << it->t_enter << "," << it->t_exit;
    }
    os << "\n";
  }
  return os.str();
}

WithinSchedule schedule_within(const SchedulingTable& table, const std::vector<ZoneTime>& times,
                               double min_shift, double widening) {
  std::vector<double> candidates{min_shift};
  for (const auto& zt : times) {
    for (const auto& c : table.zone_reservations(zt.zone)) {
      const double d = c.t_exit - (zt.t_enter - widening);
      if (d > min_shift) candidates.push_back(d);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  auto feasible = [&](double shift) {
    for (const auto& zt : times) {
      const double a = zt.t_enter - widening + shift;
      const double b = zt.t_exit + widening + shift;
      for (const auto& c : table.zone_reservations(zt.zone)) {
        if (overlaps(a, b, c.t_enter, c.t_exit)) return false;
      }
    }
    return true;
  };
  WithinSchedule out;
  bool found = false;
  for (double d : candidates) {
    if (feasible(d)) {
      out.shift = d;
      found = true;
      break;
    }
  }
  // The largest candidate clears every committed interval, so this is unreachable.
  if (!found) throw SchedulingError("no conflict-free shift found");
  for (const auto& zt : times) {
    ZoneWindow w;
    w.zone = zt.zone;
    w.t_enter_min = zt.t_enter + out.shift;
    w.t_exit_max = kInf;
    const double end = zt.t_exit + widening + out.shift;
    for (const auto& c : table.zone_reservations(zt.zone)) {
      if (c.t_enter >= end - kOverlapTol) w.t_exit_max = std::min(w.t_exit_max, c.t_enter - widening);
    }
    out.windows.push_back(w);
  }
  return out;
}

double following_delay(const MobilityProfile& leader, double leader_length,
                       const MobilityProfile& follower, double t_from, double t_to,
                       const std::function<double(double)>& required_gap, double dt) {
  auto ok = [&](double delay) {
    const int n = std::max(1, static_cast<int>(std::ceil((t_to - t_from) / dt)));
    for (int k = 0; k <= n; ++k) {
      const double tau = std::min(t_to, t_from + k * dt);
      const double rear = leader.position(tau + delay) - leader_length;
      if (rear - follower.position(tau) < required_gap(tau + delay) - 1e-9) return false;
    }
    return true;
  };
  return minimal_delay(ok);
}

double following_delay(const MobilityProfile& leader, double leader_length,
                       const MobilityProfile& follower, double t_from, double t_to, double gap,
                       double dt) {
  return following_delay(leader, leader_length, follower, t_from, t_to,
                         [gap](double) { return gap; }, dt);
}

namespace {

const TableRow* ahead_entering(const SchedulingTable& table, const Proposal& p) {
  const TableRow* best = nullptr;
  for (const auto& r : table.rows()) {
    if (r.entry_lane == p.path->entry_lane && r.cav != p.cav) best = &r;
  }
  return best;
}

// Delay needed so that, when the ego's rear clears its last zone, it is
// kinematically compatible with the vehicle ahead on the exit lane.
double after_delay(const SchedulingTable& table, const Proposal& p, double ego_exit, double shift,
                   const ControllerParams& params) {
  const TableRow* ahead = nullptr;
  for (const auto& r : table.rows()) {
    if (r.exit_lane != p.path->exit_lane || r.cav == p.cav) continue;
    if (r.last_exit() - params.widening > ego_exit + shift) continue;
    if (!ahead || r.last_exit() > ahead->last_exit()) ahead = &r;
  }
  if (!ahead || ahead->profile.waypoints.empty()) return 0.0;
  auto ok = [&](double extra) {
    const double t = ego_exit + shift + extra;
    const double x_a = ahead->profile.position(t) - ahead->intersection_exit - ahead->length;
    const double x_e = p.profile.position(t - shift - extra) - p.path->intersection_exit;
    const double gap = x_a - x_e;
    if (gap < params.safe_margin) return false;
    const double v_a = ahead->profile.speed(t);
    const double v_e = p.profile.speed(t - shift - extra);
    return v_e <= v_a + std::sqrt(2.0 * params.braking * std::max(0.0, gap - params.safe_margin)) + 1e-9;
  };
  return minimal_delay(ok);
}

}  // namespace

namespace {

// Smallest bumper gap to the same-lane vehicle ahead before the ego enters.
double lead_gap(const SchedulingTable& table, const Proposal& p, const ControllerParams& params) {
  const TableRow* lead = ahead_entering(table, p);
  if (!lead || lead->profile.waypoints.empty()) return kInf;
  double g = kInf;
  for (double t = p.profile.t_start; t <= p.profile.t_int; t += params.gap_dt)
    g = std::min(g, lead->profile.position(t) - lead->length - p.profile.position(t));
  return g;
}

// Rigid-shift analysis of one profile: before, within and after checks.
ValidationOutcome analyse(const SchedulingTable& table, const Proposal& proposal, double min_shift,
                          const ControllerParams& params, double gap_cap = kInf) {
  const auto times = profile_zone_times(proposal.profile, *proposal.path, proposal.length);
  ValidationOutcome out;
  double shift = min_shift;
  if (const TableRow* lead = ahead_entering(table, proposal); lead && !lead->profile.waypoints.empty()) {
    // The gap target is capped by what the ego could still achieve: holding
    // its speed through the negotiation zone and then braking as hard as
    // comfort allows down to v_min. The smallest gap that profile keeps is
    // the best any re-proposal can do.
    const double t_from = proposal.profile.t_start;
    const double s_from = proposal.profile.position(t_from);
    const double v_from = proposal.profile.speed(t_from);
    const double hold = proposal.vehicle ? proposal.neg_zone.length : 0.0;
    const double brake = proposal.vehicle ? -proposal.vehicle->b_max : params.braking;
    const double v_floor = proposal.vehicle ? std::min(proposal.vehicle->v_min, v_from) : 0.0;
    auto hardest = [&](double t) {
      const double t_hold = v_from > 0.0 ? hold / v_from : 0.0;
      double tau = t - t_from;
      if (tau <= t_hold) return s_from + v_from * tau;
      tau -= t_hold;
      const double t_brake = (v_from - v_floor) / brake;
      const double s1 = s_from + hold;
      if (tau <= t_brake) return s1 + v_from * tau - 0.5 * brake * tau * tau;
      return s1 + v_from * t_brake - 0.5 * brake * t_brake * t_brake + v_floor * (tau - t_brake);
    };
    double best = params.safety_gap;
    for (double t = t_from; t <= proposal.profile.t_int; t += params.gap_dt)
      best = std::min(best, lead->profile.position(t) - lead->length - hardest(t));
    // Never below a physical floor: overlapping bodies are not a gap.
    const double required =
        std::max(std::min(best < params.safety_gap ? best - kGapSlack : best - kGapTol, gap_cap), kMinBodyGap);
    out.before_delay = following_delay(lead->profile, lead->length, proposal.profile, t_from,
                                       proposal.profile.t_int, required, params.gap_dt);
    shift = std::max(shift, out.before_delay);
  }
  const double ego_exit = times.back().t_exit;
  WithinSchedule within;
  for (int round = 0; round < 50; ++round) {
    within = schedule_within(table, times, shift, params.widening);
    const double extra = after_delay(table, proposal, ego_exit, within.shift, params);
    if (extra <= 0.0) break;
    out.after_delay += extra;
    shift = within.shift + extra;
    if (round == 49) throw SchedulingError("after-intersection check did not converge");
  }
  out.shift = within.shift;
  if (within.shift <= 0.0) {
    out.verdict = Verdict::Accept;
    for (const auto& zt : times) {
      out.windows.push_back({zt.zone, zt.t_enter - params.widening, zt.t_exit + params.widening});
    }
    return out;
  }
  out.verdict = Verdict::Revise;
  out.windows = within.windows;
  // Snapped inwards to the millisecond so the vehicle receives exactly the
  // windows the re-proposal was predicted from.
  for (auto& w : out.windows) {
    w.t_enter_min = std::ceil((w.t_enter_min + params.revise_pad) * 1000.0 - 1e-6) / 1000.0;
    if (std::isfinite(w.t_exit_max)) w.t_exit_max = std::floor((w.t_exit_max - params.revise_pad) * 1000.0 + 1e-6) / 1000.0;
  }
  return out;
}

}  // namespace

ValidationOutcome validate(const SchedulingTable& table, const Proposal& proposal,
                           const ControllerParams& params) {
  if (proposal.path == nullptr) throw SchedulingError("proposal has no path");
  ValidationOutcome out = analyse(table, proposal, 0.0, params);
  if (out.verdict == Verdict::Accept || !proposal.vehicle) return out;
  // The rigid shift only approximates what the vehicle will re-propose. When
  // the vehicle model is known, predict its re-proposal and push the windows
  // further until that prediction passes every check.
  const auto& first = proposal.profile.waypoints.front();
  for (int k = 0; k < 8; ++k) {
    ValidationOutcome check;
    Proposal predicted = proposal;
    try {
      const ReplanResult r = replan_profile(*proposal.vehicle, *proposal.path, first.t,
                                            std::min(first.v, proposal.vehicle->v_max), proposal.neg_zone,
                                            out.windows);
      if (r.status != ReplanStatus::Feasible) break;
      predicted.profile = proposal.wire ? proposal.wire(*r.profile) : *r.profile;
      check = analyse(table, predicted, 0.0, params);
    } catch (const PlannerError&) {
      break;
    }
    if (check.verdict == Verdict::Accept) break;
    // A later slot that leaves the gap where it is means the shortfall comes
    // from the approach itself, not the timing. Take the gap as it stands.
    if (k == 0 && check.before_delay > 0.0) {
      const double gap = lead_gap(table, proposal, params);
      if (gap >= kMinBodyGap && lead_gap(table, predicted, params) <= gap + kGapTol) {
        ValidationOutcome relaxed = analyse(table, proposal, 0.0, params, gap - kGapTol);
        if (relaxed.verdict == Verdict::Accept) return relaxed;
      }
    }
    ValidationOutcome next = analyse(table, proposal, out.shift + check.shift, params);
    next.before_delay = out.before_delay;
    out = next;
  }
  return out;
}

}  // namespace moveover
