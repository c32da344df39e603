#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "moveover/layout.hpp"
#include "moveover/planner.hpp"

namespace moveover {

class SchedulingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ControllerParams {
  double safety_gap = 6.0;   // bumper-to-bumper before the intersection
  double safe_margin = 6.0;  // after the intersection
  double widening = 0.1;     // seconds added on each side of a reservation
  double braking = 4.5;      // |b_max| used by the after-intersection check
  double gap_dt = 0.01;      // sampling step for profile gaps
  int exchange_cap = 10;
  // Revise windows are tightened by this much so that a re-proposal meeting
  // them within the planner tolerance and the ms wire quantisation is still
  // strictly conflict-free.
  double revise_pad = 5e-3;

  void validate() const;
};

struct Reservation {
  int zone = 0;
  double t_enter = 0.0;
  double t_exit = 0.0;
};

struct TableRow {
  int cav = 0;
  MobilityProfile profile;
  int path_id = 0;
  Road entry_road = Road::North;
  Road exit_road = Road::North;
  int entry_lane = 0;
  int exit_lane = 0;
  double length = 5.0;
  // Arc positions of the path's intersection entry/exit, for lane-relative gaps.
  double intersection_entry = 0.0;
  double intersection_exit = 0.0;
  std::vector<Reservation> reservations;  // widened, in path order

  double last_exit() const;
};

TableRow make_row(int cav, const MobilityProfile& profile, const Path& path, double length,
                  double widening);

class SchedulingTable {
 public:
  // Appends a row; throws SchedulingError on duplicate cav id or on any
  // overlap with committed reservations.
  void commit(TableRow row);
  // Drops rows whose last widened exit lies before `now`.
  void expire_rows(double now);
  // The vehicle left `zone`; the row disappears once every zone is released.
  void release(int cav, int zone, double t_actual_exit);
  void remove(int cav);
  void clear();

  bool contains(int cav) const;
  const TableRow& row(int cav) const;
  const std::vector<TableRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  // Committed intervals of a zone, sorted by entry time.
  std::vector<Reservation> zone_reservations(int zone) const;
  bool zones_disjoint() const;
  std::string to_csv(const IntersectionLayout& layout) const;

 private:
  std::vector<TableRow> rows_;
  std::map<int, std::vector<std::pair<int, Reservation>>> index_;  // zone -> (cav, interval)
};

struct Proposal {
  int cav = 0;
  const Path* path = nullptr;
  MobilityProfile profile;
  double length = 5.0;
  // Planner model of the proposing vehicle. When present, Revise windows are
  // checked against the predicted re-proposal.
  std::optional<VehicleParams> vehicle;
  NegotiationZone neg_zone;
  // What a planned profile becomes on the wire; applied to predicted
  // re-proposals so they match what the vehicle will actually send.
  std::function<MobilityProfile(const MobilityProfile&)> wire;
};

enum class Verdict { Accept, Revise };

struct ValidationOutcome {
  Verdict verdict = Verdict::Accept;
  std::vector<ZoneWindow> windows;
  double shift = 0.0;  // total postponement applied to the proposal
  double before_delay = 0.0;
  double after_delay = 0.0;
};

struct WithinSchedule {
  double shift = 0.0;
  std::vector<ZoneWindow> windows;  // t_enter_min / t_exit_max, no padding
};

// Earliest rigid shift >= min_shift that makes every widened zone interval of
// the proposal disjoint from the table.
WithinSchedule schedule_within(const SchedulingTable& table, const std::vector<ZoneTime>& times,
                               double min_shift, double widening);

// Minimal delay of the follower's profile keeping `gap` metres behind the
// leader's rear bumper from `t_from` to `t_to` (follower's own clock).
double following_delay(const MobilityProfile& leader, double leader_length,
                       const MobilityProfile& follower, double t_from, double t_to, double gap,
                       double dt);
// Same with a gap requirement that depends on the (leader's) time.
double following_delay(const MobilityProfile& leader, double leader_length,
                       const MobilityProfile& follower, double t_from, double t_to,
                       const std::function<double(double)>& required_gap, double dt);

ValidationOutcome validate(const SchedulingTable& table, const Proposal& proposal,
                           const ControllerParams& params);

}  // namespace moveover
