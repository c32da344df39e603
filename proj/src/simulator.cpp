#include "moveover/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>

namespace moveover {

std::string to_string(Method m) {
  switch (m) {
    case Method::Priority: return "priority";
    case Method::TrafficLight: return "traffic_light";
    case Method::Fifo: return "fifo";
    case Method::Moveover: return "moveover";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "priority") return Method::Priority;
  if (s == "traffic_light" || s == "traffic-light") return Method::TrafficLight;
  if (s == "fifo") return Method::Fifo;
  if (s == "moveover") return Method::Moveover;
  throw ConfigError("method", "unknown method '" + s + "'");
}

TrafficLightTiming default_traffic_light(LayoutKind kind) {
  if (kind == LayoutKind::FourWay2L) return {33.0, 3.0, 9.0};
  return {35.0, 3.0, 0.0};
}

double default_negotiation_length(LayoutKind kind, const std::string& network) {
  const DelayModel m = DelayModel::from_label(network);
  if (m.label == "ideal") return 0.0;
  if (m.label == "5G") return 2.0;
  switch (kind) {
    case LayoutKind::Roundabout: return 7.5;
    case LayoutKind::FourWay2L: return 17.0;
    default: return 10.0;
  }
}

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw ConfigError("duration", "must be > 0");
  if (!(timestep > 0.0)) throw ConfigError("timestep", "must be > 0");
  if (!(rate >= 0.0)) throw ConfigError("rate", "must be >= 0");
  if (negotiation_length && !(*negotiation_length >= 0.0))
    throw ConfigError("negotiation_length", "must be >= 0");
  if (layout == LayoutKind::Roundabout && (method == Method::TrafficLight || method == Method::Fifo))
    throw ConfigError("method", to_string(method) + " is not available on a roundabout");
  if (traffic_light) {
    if (!(traffic_light->green > 0.0)) throw ConfigError("traffic_light.green", "must be > 0");
    if (!(traffic_light->yellow >= 0.0)) throw ConfigError("traffic_light.yellow", "must be >= 0");
    if (!(traffic_light->left_extension >= 0.0))
      throw ConfigError("traffic_light.left_extension", "must be >= 0");
  }
  if (!(yield_gap >= 0.0)) throw ConfigError("yield_gap", "must be >= 0");
  if (!(following.min_gap >= 0.0)) throw ConfigError("following.min_gap", "must be >= 0");
  if (!(following.emergency_decel >= following.comfort_decel) || !(following.comfort_decel > 0.0))
    throw ConfigError("following.emergency_decel", "need emergency >= comfort > 0");
  try {
    network.validate();
  } catch (const std::exception& e) {
    throw ConfigError("network", e.what());
  }
  try {
    controller.validate();
  } catch (const std::exception& e) {
    throw ConfigError("controller", e.what());
  }
  try {
    const IntersectionLayout l = build();
    vehicle_for(l).validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const LayoutError& e) {
    throw ConfigError("layout", e.what());
  } catch (const std::exception& e) {
    throw ConfigError("vehicle", e.what());
  }
}

IntersectionLayout ScenarioConfig::build() const {
  LayoutParams p = layout_overrides;
  if (!p.negotiation_length)
    p.negotiation_length = negotiation_length.value_or(default_negotiation_length(layout, network.label));
  return build_layout(layout, p);
}

VehicleParams ScenarioConfig::vehicle_for(const IntersectionLayout& l) const {
  VehicleParams vp = vehicle;
  if (vehicle_speeds_from_layout) {
    vp.v_max = l.v_max;
    vp.v_max_turn = l.v_max_turn;
  }
  return vp;
}

double safe_speed(double gap, double leader_speed, double v, double decel, double dt, double reaction) {
  const double d = gap + leader_speed * leader_speed / (2.0 * decel) - v * dt / 2.0;
  if (d <= 0.0) return 0.0;
  const double tau = std::max(reaction, dt / 2.0);
  return -decel * tau + std::sqrt(decel * decel * tau * tau + 2.0 * decel * d);
}

double car_following_accel(const std::optional<Leader>& leader, double s, double v, double v_limit,
                           const FollowingParams& params, double dt) {
  double target = std::min(v + params.a_max * dt, v_limit);
  if (leader) {
    const double gap = leader->rear - s - leader->min_gap;
    target = std::min(target, safe_speed(gap, leader->speed, v, params.comfort_decel, dt, params.reaction));
  }
  target = std::max(target, 0.0);
  const double a = (target - v) / dt;
  return std::clamp(a, -params.emergency_decel, params.a_max);
}

std::string events_csv(const std::vector<EventRecord>& events) {
  std::ostringstream os;
  os.precision(10);
  os << "t,vehicle,event,position,speed\n";
  for (const auto& e : events) os << e.t << ',' << e.vehicle << ',' << e.event << ',' << e.position << ',' << e.speed << '\n';
  return os.str();
}

namespace {

enum class Mode { Free, Negotiating, Tracking, Backup };

// Ungranted vehicles stop this far before the intersection entry.
constexpr double kStopMargin = 0.5;
// Kept on top of the controller's safety gap when entering a negotiation zone.
constexpr double kGapMargin = 0.5;
enum class Signal { Green, Yellow, Red };

Road opposite(Road r) {
  switch (r) {
    case Road::North: return Road::South;
    case Road::South: return Road::North;
    case Road::East: return Road::West;
    case Road::West: return Road::East;
  }
  return r;
}

Signal signal_for(const TrafficLightTiming& tl, Road road, TurnKind turn, double t) {
  const double phase = tl.green + std::max(tl.left_extension, 0.0) + tl.yellow;
  const double c = std::fmod(t, 2.0 * phase);
  const bool axis_a = road == Road::West || road == Road::East;
  const bool active = axis_a ? c < phase : c >= phase;
  if (!active) return Signal::Red;
  const double tau = axis_a ? c : c - phase;
  const double g_end = tl.green + (turn == TurnKind::Left ? tl.left_extension : 0.0);
  if (tau < g_end) return Signal::Green;
  if (tau < g_end + tl.yellow) return Signal::Yellow;
  return Signal::Red;
}

// Independent point-in-polygon test used by the safety checker.
bool inside(const std::vector<Vec2>& poly, Vec2 p) {
  bool in = false;
  for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    if ((poly[i].y > p.y) != (poly[j].y > p.y)) {
      const double x = poly[j].x + (p.y - poly[j].y) * (poly[i].x - poly[j].x) / (poly[i].y - poly[j].y);
      if (p.x < x) in = !in;
    }
  }
  return in;
}

struct Vehicle {
  int id = 0;
  const Path* path = nullptr;
  double s = 0.0, v = 0.0, a = 0.0;
  double s_prev = 0.0;
  Mode mode = Mode::Free;
  double depart = 0.0;
  std::unique_ptr<VehicleEndpoint> endpoint;
  std::optional<MobilityProfile> profile;
  double t0 = 0.0, v0 = 0.0;  // negotiation-zone entry
  bool negotiation_started = false;
  bool granted = false;
  std::vector<int> claims;  // zones held, not yet released
  double boundary_time = -1.0;  // first time at s = 0, for FIFO order
  VehicleRecord rec;
  bool stopped = false;
};

enum class EvKind { Message = 0, Enter = 1, Deadline = 2 };

struct Event {
  double t = 0.0;
  EvKind kind = EvKind::Message;
  long seq = 0;
  int to = kController;  // message destination, or vehicle id
  std::vector<std::uint8_t> bytes;
  bool operator>(const Event& o) const {
    if (t != o.t) return t > o.t;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

class World {
 public:
  explicit World(const ScenarioConfig& cfg)
      : cfg_(cfg),
        layout_(cfg.build()),
        vp_(cfg.vehicle_for(layout_)),
        tl_(cfg.traffic_light.value_or(default_traffic_light(cfg.layout))),
        controller_(layout_, cfg.controller, vp_) {
    for (Road r : layout_.incoming_roads()) {
      roads_.push_back(r);
      std::seed_seq sq{cfg.seed, static_cast<std::uint64_t>(1 + static_cast<int>(r))};
      arrival_rng_.emplace_back(sq);
    }
    std::seed_seq se{cfg.seed, std::uint64_t{11}};
    exit_rng_.seed(se);
    std::seed_seq sn{cfg.seed, std::uint64_t{21}};
    net_rng_.seed(sn);
    for (size_t i = 0; i < roads_.size(); ++i) next_arrival_.push_back(draw_gap(i));
    for (const auto& z : layout_.conflict_zones) zone_poly_[z.id] = z.corners();
  }

  RunOutput run() {
    const double dt = cfg_.timestep;
    const auto steps = static_cast<std::uint64_t>(std::llround(cfg_.duration / dt));
    for (std::uint64_t k = 0; k < steps; ++k) {
      const double t = k * dt;
      step(t, t + dt);
      out_.metrics.steps = k + 1;
    }
    finish(steps * dt);
    return std::move(out_);
  }

 private:
  double draw_gap(size_t road) {
    if (cfg_.rate <= 0.0) return std::numeric_limits<double>::infinity();
    return std::exponential_distribution<double>(cfg_.rate)(arrival_rng_[road]);
  }

  void log(double t, const Vehicle& v, const char* what) {
    if (cfg_.event_log) out_.events.push_back({t, v.id, what, v.s, v.v});
  }

  bool moveover_active() const { return cfg_.method == Method::Moveover && !backup_; }

  // ------------------------------------------------------------------ spawn
  void spawn(double t) {
    for (size_t i = 0; i < roads_.size(); ++i) {
      while (next_arrival_[i] <= t) {
        const auto paths = layout_.paths_from(roads_[i]);
        std::uniform_int_distribution<size_t> pick(0, paths.size() - 1);
        const Path* p = paths[pick(exit_rng_)];
        waiting_[p->entry_lane].push_back({next_arrival_[i], p});
        next_arrival_[i] += draw_gap(i);
      }
    }
    for (auto& [lane, q] : waiting_) {
      if (q.empty()) continue;
      const Vehicle* last = nullptr;
      for (const auto& v : vehicles_)
        if (v->path->entry_lane == lane && (!last || v->s < last->s)) last = v.get();
      const Path* p = q.front().second;
      const double origin = -p->upstream_length;
      const double target = moveover_active() ? layout_.negotiation_zone(lane).hold_speed : vp_.v_max;
      double v0 = target;
      if (last) {
        const double gap = last->s - vp_.length - origin - cfg_.following.min_gap;
        if (gap < 0.0) continue;
        v0 = std::min(v0, safe_speed(gap, last->v, target, cfg_.following.comfort_decel, cfg_.timestep,
                                     cfg_.following.reaction));
      }
      auto veh = std::make_unique<Vehicle>();
      veh->id = next_id_++;
      veh->path = p;
      veh->s = veh->s_prev = origin;
      veh->v = v0;
      veh->depart = q.front().first;
      veh->mode = moveover_active() || cfg_.method != Method::Moveover ? Mode::Free : Mode::Backup;
      veh->rec.id = veh->id;
      veh->rec.depart = veh->depart;
      veh->rec.entry_road = std::string(to_string(p->entry_road));
      veh->rec.exit_road = std::string(to_string(p->exit_road));
      veh->rec.min_speed = v0;
      veh->rec.backup = veh->mode == Mode::Backup;
      q.pop_front();
      log(t, *veh, "spawn");
      by_id_[veh->id] = veh.get();
      vehicles_.push_back(std::move(veh));
      ++out_.metrics.spawned;
    }
  }

  // ---------------------------------------------------------- zone access
  // Zones may be reserved behind earlier holders from the same entry lane;
  // they are entered in grant order, so waits never form a cycle.
  bool zones_free(const Vehicle& x) const {
    for (const auto& zi : x.path->zone_intervals) {
      auto it = holders_.find(zi.zone);
      if (it == holders_.end()) continue;
      for (int h : it->second)
        if (by_id_.at(h)->path->entry_lane != x.path->entry_lane) return false;
    }
    return true;
  }

  // Entry of the first path zone still held by a vehicle granted before x.
  std::optional<double> blocked_zone_entry(const Vehicle& x) const {
    for (int zone : x.claims) {
      const auto& h = holders_.at(zone);
      if (h.empty() || h.front() == x.id) continue;
      const double enter = x.path->interval_for(zone)->enter;
      if (x.s <= enter) return enter;
    }
    return std::nullopt;
  }

  bool paths_conflict(const Path& a, const Path& b) const {
    for (const auto& za : a.zone_intervals)
      if (b.crosses(za.zone)) return true;
    return false;
  }

  double time_to_line(const Vehicle& y) const {
    return (y.path->intersection_entry - y.s) / std::max(y.v, 0.5);
  }

  bool needs_grant(const Vehicle& v) const {
    return (v.mode == Mode::Free || v.mode == Mode::Backup) && !v.granted &&
           (cfg_.method != Method::Moveover || v.mode == Mode::Backup);
  }

  // Does x have to let y go first under the legacy priority rules?
  bool yields_to(const Vehicle& x, const Vehicle& y) const {
    if (!paths_conflict(*x.path, *y.path)) return false;
    const bool px = layout_.is_priority_road(x.path->entry_road);
    const bool py = layout_.is_priority_road(y.path->entry_road);
    if (py && !px) return true;
    if (px != py) return false;
    return layout_.kind != LayoutKind::Roundabout && x.path->turn == TurnKind::Left &&
           y.path->turn != TurnKind::Left && y.path->entry_road == opposite(x.path->entry_road);
  }

  Method policy_for(const Vehicle& v) const {
    if (cfg_.method == Method::Moveover || v.mode == Mode::Backup) return Method::Priority;
    return cfg_.method;
  }

  bool may_enter(const Vehicle& x, double t) const {
    if (!zones_free(x)) return false;
    const Method m = policy_for(x);
    const double dist = x.path->intersection_entry - x.s;
    if (m == Method::TrafficLight) {
      const Signal sig = signal_for(tl_, x.path->entry_road, x.path->turn, t);
      if (sig == Signal::Red) return false;
      if (sig == Signal::Yellow && dist > x.v * x.v / (2.0 * cfg_.following.comfort_decel)) return false;
    }
    if (m == Method::Fifo) {
      for (const auto& y : vehicles_) {
        if (y.get() == &x || !needs_grant(*y) || y->boundary_time < 0.0) continue;
        if (y->boundary_time < x.boundary_time && paths_conflict(*x.path, *y->path)) return false;
      }
      if (x.boundary_time < 0.0) return false;
    }
    if (m == Method::Priority || m == Method::TrafficLight) {
      for (const auto& y : vehicles_) {
        if (y.get() == &x || !needs_grant(*y) || y->s > y->path->intersection_entry) continue;
        if (m == Method::TrafficLight &&
            signal_for(tl_, y->path->entry_road, y->path->turn, t) == Signal::Red)
          continue;
        if (yields_to(x, *y) && time_to_line(*y) < cfg_.yield_gap) return false;
      }
    }
    return true;
  }

  void grant(Vehicle& v, double t) {
    v.granted = true;
    for (const auto& zi : v.path->zone_intervals) {
      holders_[zi.zone].push_back(v.id);
      v.claims.push_back(zi.zone);
    }
    log(t, v, "grant");
  }

  void release_zones(Vehicle& v) {
    std::erase_if(v.claims, [&](int zone) {
      if (v.s - vp_.length <= v.path->interval_for(zone)->exit) return false;
      std::erase(holders_[zone], v.id);
      return true;
    });
  }

  // ------------------------------------------------------------ controls
  std::optional<Leader> leader_of(const Vehicle& x) const {
    std::optional<Leader> best;
    auto consider = [&](double rear, double speed) {
      if (!best || rear < best->rear) best = Leader{rear, speed, cfg_.following.min_gap};
    };
    const Path& px = *x.path;
    for (const auto& yp : vehicles_) {
      const Vehicle& y = *yp;
      if (&y == &x) continue;
      const Path& py = *y.path;
      if (py.entry_lane == px.entry_lane && y.s > x.s &&
          (py.id == px.id || y.s - vp_.length < py.intersection_entry)) {
        consider(y.s - vp_.length, y.v);
      }
      if (py.exit_lane == px.exit_lane && py.id != px.id && x.s >= px.intersection_entry &&
          y.s >= py.intersection_entry) {
        const double uy = y.s - py.intersection_exit, ux = x.s - px.intersection_exit;
        if (uy > ux) consider(x.s + (uy - ux) - vp_.length, y.v);
      }
    }
    return best;
  }

  double speed_limit(const Vehicle& x) const {
    const Path& p = *x.path;
    if (!is_turn(p.turn)) return vp_.v_max;
    const double vt = vp_.v_max_turn;
    if (x.s >= p.intersection_entry) return x.s - vp_.length <= p.intersection_exit ? vt : vp_.v_max;
    const double d = p.intersection_entry - x.s - x.v * cfg_.timestep;
    return std::min(vp_.v_max, std::sqrt(vt * vt + 2.0 * cfg_.following.comfort_decel * std::max(0.0, d)));
  }

  void drive_free(Vehicle& x, double t) {
    const double dt = cfg_.timestep;
    std::optional<Leader> lead = leader_of(x);
    // Inside the negotiation zone the vehicle holds its speed and cannot
    // react; it enters with the headway a comfortably braking leader would
    // eat up during the hold.
    if (lead && moveover_active() && x.s < 0.0) {
      // The controller checks its own safety gap against the vehicle ahead.
      lead->min_gap = std::max(lead->min_gap, cfg_.controller.safety_gap + kGapMargin);
      const double l_neg = layout_.negotiation_zone(x.path->entry_lane).length;
      const double t_hold = l_neg / std::max(x.v, 1.0);
      lead->min_gap += std::min(l_neg, 0.5 * cfg_.following.comfort_decel * t_hold * t_hold);
    }
    const bool lock_policy = cfg_.method != Method::Moveover || x.mode == Mode::Backup;
    if (lock_policy && !x.granted && x.s <= x.path->intersection_entry) {
      const double dist = x.path->intersection_entry - x.s;
      const double horizon = x.v * x.v / (2.0 * cfg_.following.comfort_decel) + 2.0 * x.v * dt + 5.0;
      if (dist <= horizon && may_enter(x, t)) grant(x, t);
    }
    x.a = car_following_accel(lead, x.s, x.v, speed_limit(x), cfg_.following, dt);
    std::optional<double> stop;
    if (lock_policy && !x.granted && x.s <= x.path->intersection_entry) stop = x.path->intersection_entry;
    if (x.granted) stop = blocked_zone_entry(x);
    if (stop) {
      // A fixed stop point needs no reaction headway.
      FollowingParams fixed = cfg_.following;
      fixed.reaction = 0.0;
      const Leader line{*stop, 0.0, kStopMargin};
      x.a = std::min(x.a, car_following_accel(line, x.s, x.v, speed_limit(x), fixed, dt));
    }
  }

  // --------------------------------------------------------------- events
  void push_messages(double t, const std::vector<Outgoing>& out) {
    for (const auto& o : out) {
      Event e;
      e.t = t + sample_delay(cfg_.network, net_rng_) / 1000.0;
      e.kind = EvKind::Message;
      e.seq = seq_++;
      e.to = o.to;
      e.bytes = encode(o.msg);
      events_.push(std::move(e));
    }
  }

  void process_events(double until) {
    while (!events_.empty() && events_.top().t <= until) {
      Event e = events_.top();
      events_.pop();
      try {
        handle(e);
      } catch (const ProtocolViolation&) {
        ++out_.metrics.safety.protocol_violations;
      }
    }
  }

  void handle(const Event& e) {
    if (e.kind == EvKind::Message && e.to == kController) {
      if (backup_) return;
      controller_.expire(e.t);
      const Message msg = decode(e.bytes);
      const auto rows_before = controller_.table().rows().size();
      push_messages(e.t, controller_.on_message(e.t, msg));
      if (controller_.table().rows().size() != rows_before && !controller_.table().zones_disjoint())
        ++out_.metrics.safety.table_violations;
      return;
    }
    auto it = by_id_.find(e.to);
    if (it == by_id_.end()) return;
    Vehicle& v = *it->second;
    if (v.mode != Mode::Negotiating || !v.endpoint) return;
    std::vector<Outgoing> out;
    switch (e.kind) {
      case EvKind::Enter: out = v.endpoint->enter_zone(v.t0, v.v0); break;
      case EvKind::Message: out = v.endpoint->on_message(e.t, decode(e.bytes)); break;
      case EvKind::Deadline: out = v.endpoint->on_deadline(e.t); break;
    }
    push_messages(e.t, out);
    if (e.kind == EvKind::Enter && v.endpoint->state() != NegotiationState::BackupTriggered) {
      Event d;
      d.t = v.endpoint->deadline();
      d.kind = EvKind::Deadline;
      d.seq = seq_++;
      d.to = v.id;
      events_.push(std::move(d));
    }
    const NegotiationState st = v.endpoint->state();
    if (st == NegotiationState::Agreed) {
      v.profile = *v.endpoint->profile();
      v.mode = Mode::Tracking;
      v.rec.negotiated = true;
      v.rec.messages = v.endpoint->messages();
      agreed_now_.push_back(v.id);
      log(e.t, v, "agreed");
    } else if (st == NegotiationState::BackupTriggered) {
      log(e.t, v, "negotiation-failed");
      enter_backup(e.t, v.id, to_string(v.endpoint->failure()));
    }
  }

  // --------------------------------------------------------------- backup
  void enter_backup(double t, int cav, const std::string& cause) {
    if (backup_) return;
    backup_ = true;
    out_.metrics.backups.push_back({t, -1.0, cav, cause});
    for (auto& vp : vehicles_) {
      Vehicle& v = *vp;
      const Path& p = *v.path;
      if (v.mode == Mode::Tracking && v.s - vp_.length <= p.intersection_exit) {
        const double stop = v.v * v.v / (2.0 * cfg_.following.comfort_decel) + v.v * cfg_.timestep;
        if (v.s + stop >= p.intersection_entry) {
          // Too close to stop: finish the committed profile holding its zones.
          v.granted = true;
          for (const auto& zi : p.zone_intervals) {
            if (v.s - vp_.length > zi.exit) continue;
            holders_[zi.zone].push_back(v.id);
            v.claims.push_back(zi.zone);
          }
          continue;
        }
      }
      if (v.mode == Mode::Tracking && v.s - vp_.length > p.intersection_exit) continue;
      if (v.mode == Mode::Free && v.s >= p.intersection_entry) continue;
      v.mode = Mode::Backup;
      v.endpoint.reset();
      v.profile.reset();
      v.granted = false;
      v.rec.backup = true;
    }
    while (!events_.empty()) events_.pop();
  }

  void maybe_recover(double t) {
    if (!backup_) return;
    // Coordination resumes once nobody is between a negotiation-zone start
    // and the intersection exit; upstream vehicles negotiate afresh.
    for (const auto& v : vehicles_)
      if (v->s >= 0.0 && v->s - vp_.length <= v->path->intersection_exit) return;
    backup_ = false;
    for (auto& v : vehicles_) {
      if (v->s >= 0.0) continue;
      v->mode = Mode::Free;
      v->granted = false;
      v->negotiation_started = false;
    }
    out_.metrics.backups.back().t_end = t;
    controller_.resume();
    for (auto& [z, h] : holders_) h.clear();
    for (auto& v : vehicles_) v->claims.clear();
  }

  // ------------------------------------------------------------- checking
  void check_safety(double dt) {
    auto& sr = out_.metrics.safety;
    const double bound = vp_.v_max * dt + 0.5 * vp_.a_max * dt * dt + 0.05;
    std::map<int, int> count;
    for (const auto& vp : vehicles_) {
      const Vehicle& v = *vp;
      if (v.s - v.s_prev > bound || v.s < v.s_prev - 1e-9) ++sr.teleports;
      if (v.mode == Mode::Tracking && v.profile) {
        const double t = now_;
        if (t <= v.profile->t_end)
          sr.max_tracking_error = std::max(sr.max_tracking_error, std::abs(v.s - v.profile->position(t)));
      }
      const Path& p = *v.path;
      const double rear = v.s - vp_.length;
      if (v.s < p.intersection_entry - 0.5 || rear > p.intersection_exit + 0.5) continue;
      for (const auto& [zid, poly] : zone_poly_) {
        bool hit = false;
        for (double u = std::max(rear, 0.0); u <= v.s + 1e-9 && !hit; u += 0.1)
          hit = inside(poly, p.position_at(std::min(u, v.s)));
        if (hit) ++count[zid];
      }
    }
    for (const auto& [z, n] : count)
      if (n > 1) ++sr.co_occupancy;
    // Rear-end overlaps between consecutive vehicles of one approach lane.
    std::map<int, std::vector<const Vehicle*>> lanes;
    for (const auto& vp : vehicles_)
      if (vp->s <= vp->path->intersection_entry) lanes[vp->path->entry_lane].push_back(vp.get());
    for (auto& [lane, vs] : lanes) {
      std::sort(vs.begin(), vs.end(), [](auto* a, auto* b) { return a->s < b->s; });
      for (size_t i = 0; i + 1 < vs.size(); ++i)
        if (vs[i]->s > vs[i + 1]->s - vp_.length) ++sr.rear_end;
    }
  }

  // ----------------------------------------------------------------- step
  void step(double t, double t1) {
    now_ = t1;
    spawn(t);
    const double dt = cfg_.timestep;
    for (auto& vp : vehicles_) {
      Vehicle& v = *vp;
      if (v.mode == Mode::Free || v.mode == Mode::Backup) drive_free(v, t);
    }
    std::vector<Vehicle*> crossed;
    for (auto& vp : vehicles_) {
      Vehicle& v = *vp;
      v.s_prev = v.s;
      const double v_old = v.v;
      switch (v.mode) {
        case Mode::Free:
        case Mode::Backup: {
          const double nv = std::max(0.0, v.v + v.a * dt);
          v.s += (v.v + nv) / 2.0 * dt;
          v.v = nv;
          break;
        }
        case Mode::Negotiating:
          v.s = v.v0 * (t1 - v.t0);
          v.v = v.v0;
          break;
        case Mode::Tracking:
          v.s = v.profile->position(t1);
          v.v = v.profile->speed(t1);
          if (t1 >= v.profile->t_end) v.mode = Mode::Free;
          break;
      }
      v.a = (v.v - v_old) / dt;
      if (v.s_prev < 0.0 && v.s >= 0.0) {
        const double f = -v.s_prev / (v.s - v.s_prev);
        v.boundary_time = t + f * dt;
        if (v.mode == Mode::Free && moveover_active() && !v.negotiation_started) {
          v.t0 = v.boundary_time;
          v.v0 = std::clamp(v_old + f * (v.v - v_old), 1e-3, vp_.v_max);
          crossed.push_back(&v);
        }
      }
    }
    for (Vehicle* v : crossed) {
      const Path& p = *v->path;
      v->negotiation_started = true;
      v->endpoint = std::make_unique<VehicleEndpoint>(v->id, vp_, p, layout_.negotiation_zone(p.entry_lane),
                                                      cfg_.controller.exchange_cap);
      v->mode = Mode::Negotiating;
      v->s = v->v0 * (t1 - v->t0);
      v->v = v->v0;
      log(v->t0, *v, "negotiation-zone");
      Event e;
      e.t = v->t0;
      e.kind = EvKind::Enter;
      e.seq = seq_++;
      e.to = v->id;
      events_.push(std::move(e));
    }
    agreed_now_.clear();
    process_events(t1);
    for (int id : agreed_now_) {
      auto it = by_id_.find(id);
      if (it == by_id_.end()) continue;
      Vehicle& v = *it->second;
      if (v.mode != Mode::Tracking) continue;
      v.s = v.profile->position(t1);
      v.v = v.profile->speed(t1);
    }
    for (auto& vp : vehicles_) release_zones(*vp);
    check_safety(dt);
    // Per-vehicle accounting and removal at the end of the exit road.
    const EmissionModel& em = cfg_.emission;
    for (auto& vp : vehicles_) {
      Vehicle& v = *vp;
      v.rec.co2_kg += em.rate(v.v, v.a) * dt / 1000.0;
      v.rec.min_speed = std::min(v.rec.min_speed, v.v);
      const bool stopped = v.v < 0.1;
      if (stopped && !v.stopped) ++v.rec.stops;
      v.stopped = stopped;
    }
    std::erase_if(vehicles_, [&](const std::unique_ptr<Vehicle>& vp) {
      Vehicle& v = *vp;
      if (v.s < v.path->total_length) return false;
      for (int z : v.claims) std::erase(holders_[z], v.id);
      v.rec.arrive = t1;
      v.rec.travel_time = t1 - v.depart;
      v.rec.completed = true;
      log(t1, v, "exit");
      out_.metrics.vehicles.push_back(v.rec);
      by_id_.erase(v.id);
      return true;
    });
    maybe_recover(t1);
  }

  void finish(double t_end) {
    for (auto& vp : vehicles_) {
      vp->rec.arrive = t_end;
      vp->rec.travel_time = t_end - vp->depart;
      out_.metrics.vehicles.push_back(vp->rec);
    }
    for (auto& [lane, q] : waiting_) {
      for (const auto& [t, p] : q) {
        VehicleRecord r;
        r.id = next_id_++;
        r.entry_road = std::string(to_string(p->entry_road));
        r.exit_road = std::string(to_string(p->exit_road));
        r.depart = t;
        r.arrive = t_end;
        r.travel_time = t_end - t;
        out_.metrics.vehicles.push_back(r);
      }
    }
    std::stable_sort(out_.metrics.vehicles.begin(), out_.metrics.vehicles.end(),
                     [](const auto& a, const auto& b) { return a.depart < b.depart; });
  }

  const ScenarioConfig& cfg_;
  IntersectionLayout layout_;
  VehicleParams vp_;
  TrafficLightTiming tl_;
  ControllerEndpoint controller_;
  std::vector<Road> roads_;
  std::vector<std::mt19937_64> arrival_rng_;
  std::mt19937_64 exit_rng_, net_rng_;
  std::vector<double> next_arrival_;
  std::map<int, std::deque<std::pair<double, const Path*>>> waiting_;
  std::vector<std::unique_ptr<Vehicle>> vehicles_;
  std::unordered_map<int, Vehicle*> by_id_;
  std::map<int, std::vector<int>> holders_;
  std::map<int, std::vector<Vec2>> zone_poly_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::vector<int> agreed_now_;
  long seq_ = 0;
  int next_id_ = 0;
  bool backup_ = false;
  double now_ = 0.0;
  RunOutput out_;
};

}  // namespace

RunOutput run(const ScenarioConfig& config) {
  config.validate();
  World w(config);
  return w.run();
}

}  // namespace moveover
