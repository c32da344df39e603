#include "moveover/negotiation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace moveover {

DelayModel DelayModel::from_label(const std::string& label) {
  std::string l = label;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "ideal") return ideal();
  if (l == "5g") return five_g();
  if (l == "4g") return four_g();
  throw std::invalid_argument("unknown network model '" + label + "'");
}

void DelayModel::validate() const {
  if (!(d_min_ms >= 0.0) || !(d_max_ms >= d_min_ms))
    throw std::invalid_argument("delay model needs 0 <= d_min <= d_max");
}

double sample_delay(const DelayModel& model, std::mt19937_64& rng) {
  if (model.d_max_ms == model.d_min_ms) return model.d_min_ms;
  return std::uniform_real_distribution<double>(model.d_min_ms, model.d_max_ms)(rng);
}

namespace {

std::uint16_t heading_field(const Path& path, double s) {
  const double ds = 0.05;
  const double lo = std::clamp(s - ds, 0.0, path.total_length);
  const double hi = std::clamp(s + ds, 0.0, path.total_length);
  const Vec2 a = path.position_at(lo), b = path.position_at(hi);
  double deg = std::atan2(b.y - a.y, b.x - a.x) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 360.0;
  return static_cast<std::uint16_t>(std::lround(deg * 100.0) % 36000);
}

std::int16_t accel_field(double a) {
  return static_cast<std::int16_t>(std::clamp(std::lround(a * 100.0), -32768L, 32767L));
}

}  // namespace

ProposalMsg make_proposal(int cav, double now, const MobilityProfile& profile, const Path& path,
                          const VehicleParams& vehicle, std::uint8_t sequence) {
  if (profile.waypoints.size() > kMaxWaypointFields) throw CodecError("profile has too many waypoints");
  ProposalMsg m;
  const double s = std::clamp(profile.position(now), 0.0, path.total_length);
  const Vec2 p = path.position_at(s);
  m.header.station_id = static_cast<std::uint32_t>(cav);
  m.header.generation_time_ms = to_ms(now);
  m.header.ref_x_cm = to_cm(p.x);
  m.header.ref_y_cm = to_cm(p.y);
  m.header.heading = heading_field(path, s);
  m.header.sequence = sequence;
  m.status.speed_cms = to_cms(profile.speed(now));
  m.status.accel_cms2 = accel_field(profile.acceleration(now));
  m.status.heading = m.header.heading;
  m.status.length_cm = static_cast<std::uint16_t>(std::lround(vehicle.length * 100.0));
  m.status.width_cm = static_cast<std::uint8_t>(std::min(255L, std::lround(vehicle.width * 100.0)));
  m.status.path_id = static_cast<std::uint8_t>(path.id);
  const auto& wps = profile.waypoints;
  for (size_t i = 0; i < wps.size(); ++i) {
    const Waypoint& w = wps[i];
    WaypointField f;
    f.time_ms = to_ms(w.t);
    f.position_cm = to_cm(w.s);
    // Round the span outwards so it still covers every zone of the path.
    if (i == 0) f.position_cm = static_cast<std::int32_t>(std::floor(w.s * 100.0 + 1e-6));
    if (i + 1 == wps.size()) f.position_cm = static_cast<std::int32_t>(std::ceil(w.s * 100.0 - 1e-6));
    f.speed_cms = to_cms(w.v);
    if (!m.waypoints.empty() && f.time_ms <= m.waypoints.back().time_ms) {
      // Two waypoints in one millisecond: keep the later one unless it would
      // displace the first.
      if (i + 1 < wps.size()) continue;
      if (m.waypoints.size() > 1) m.waypoints.back() = f;
      else {
        f.time_ms = m.waypoints.back().time_ms + 1;
        m.waypoints.push_back(f);
      }
      continue;
    }
    m.waypoints.push_back(f);
  }
  return m;
}

MobilityProfile decode_profile(const ProposalMsg& msg, const Path& path) {
  if (msg.waypoints.size() < 2) throw CodecError("proposal needs at least two waypoints");
  MobilityProfile p;
  for (const auto& f : msg.waypoints) {
    if (!p.waypoints.empty() && from_ms(f.time_ms) <= p.waypoints.back().t)
      throw CodecError("waypoint times must increase");
    p.waypoints.push_back({from_ms(f.time_ms), f.position_cm / 100.0, f.speed_cms / 100.0});
  }
  p.t_start = p.waypoints.front().t;
  p.t_end = p.waypoints.back().t;
  p.t_int = path.intersection_entry >= p.start_position() && path.intersection_entry <= p.end_position()
                ? p.time_at(path.intersection_entry)
                : p.t_start;
  return p;
}

MobilityProfile quantize_profile(const MobilityProfile& profile, const Path& path) {
  VehicleParams dummy;
  return decode_profile(make_proposal(0, profile.t_start, profile, path, dummy, 0), path);
}

std::vector<Trr> windows_to_trrs(const std::vector<ZoneWindow>& windows) {
  if (windows.size() > kMaxTrrs) throw CodecError("too many reservation intervals");
  std::vector<Trr> out;
  for (const auto& w : windows) {
    Trr t;
    t.zone = static_cast<std::uint8_t>(w.zone);
    // Round inwards so the quantised window never grows.
    t.enter_min_ms = static_cast<std::uint32_t>(std::ceil(std::max(0.0, w.t_enter_min) * 1000.0 - 1e-6));
    t.exit_max_ms = std::isfinite(w.t_exit_max)
                        ? static_cast<std::uint32_t>(std::floor(w.t_exit_max * 1000.0 + 1e-6))
                        : kOpenTime;
    out.push_back(t);
  }
  return out;
}

std::vector<ZoneWindow> trrs_to_windows(const std::vector<Trr>& trrs) {
  std::vector<ZoneWindow> out;
  for (const auto& t : trrs) {
    ZoneWindow w;
    w.zone = t.zone;
    w.t_enter_min = from_ms(t.enter_min_ms);
    if (t.exit_max_ms != kOpenTime) w.t_exit_max = from_ms(t.exit_max_ms);
    out.push_back(w);
  }
  return out;
}

std::string to_string(NegotiationState s) {
  switch (s) {
    case NegotiationState::Idle: return "idle";
    case NegotiationState::Proposing: return "proposing";
    case NegotiationState::AwaitingResponse: return "awaiting-response";
    case NegotiationState::Agreed: return "agreed";
    case NegotiationState::BackupTriggered: return "backup-triggered";
  }
  return "?";
}

std::string to_string(FailureCause c) {
  switch (c) {
    case FailureCause::None: return "none";
    case FailureCause::Deadline: return "deadline";
    case FailureCause::Infeasible: return "infeasible";
    case FailureCause::ExchangeCap: return "exchange-cap";
  }
  return "?";
}

// ---------------------------------------------------------------- vehicle

VehicleEndpoint::VehicleEndpoint(int cav, VehicleParams params, const Path& path,
                                 NegotiationZone neg_zone, int exchange_cap)
    : cav_(cav), params_(params), path_(&path), neg_zone_(neg_zone), exchange_cap_(exchange_cap) {
  if (exchange_cap < 2) throw std::invalid_argument("exchange cap must allow one round");
}

std::vector<Outgoing> VehicleEndpoint::propose(double now, const MobilityProfile& profile) {
  state_ = NegotiationState::Proposing;
  const ProposalMsg m = make_proposal(cav_, now, profile, *path_, params_,
                                      static_cast<std::uint8_t>(messages_));
  profile_ = decode_profile(m, *path_);
  ++messages_;
  state_ = NegotiationState::AwaitingResponse;
  return {Outgoing{kController, m}};
}

std::vector<Outgoing> VehicleEndpoint::fail(double now, FailureCause cause) {
  state_ = NegotiationState::BackupTriggered;
  failure_ = cause;
  CancelMsg c;
  c.header.station_id = static_cast<std::uint32_t>(cav_);
  c.header.generation_time_ms = to_ms(now);
  c.header.sequence = static_cast<std::uint8_t>(messages_);
  c.status.length_cm = static_cast<std::uint16_t>(std::lround(params_.length * 100.0));
  c.status.width_cm = static_cast<std::uint8_t>(std::min(255L, std::lround(params_.width * 100.0)));
  c.status.path_id = static_cast<std::uint8_t>(path_->id);
  return {Outgoing{kController, c}};
}

std::vector<Outgoing> VehicleEndpoint::enter_zone(double t0, double v0) {
  if (state_ != NegotiationState::Idle) throw ProtocolViolation("enter-zone outside idle state");
  t0_ = t0;
  v0_ = v0;
  deadline_ = t0 + neg_zone_.length / std::max(v0, 1e-9);
  MobilityProfile p;
  try {
    p = propose_profile(params_, *path_, t0, v0, neg_zone_);
  } catch (const PlannerError&) {
    return fail(t0, FailureCause::Infeasible);
  }
  return propose(t0, p);
}

std::vector<Outgoing> VehicleEndpoint::on_message(double now, const Message& msg) {
  const auto* r = std::get_if<ResponseMsg>(&msg);
  if (!r) throw ProtocolViolation("vehicle received a non-response message");
  // A response can cross our cancel on the wire; it is stale, not a violation.
  if (state_ == NegotiationState::BackupTriggered) return {};
  if (state_ != NegotiationState::AwaitingResponse)
    throw ProtocolViolation("response received in state " + to_string(state_));
  if (r->header.station_id != static_cast<std::uint32_t>(cav_))
    throw ProtocolViolation("response addressed to another station");
  ++messages_;
  if (r->role == Role::Accept) {
    state_ = NegotiationState::Agreed;
    agreed_at_ = now;
    return {};
  }
  if (messages_ + 2 > exchange_cap_) return fail(now, FailureCause::ExchangeCap);
  // Replan from the entry state as sent on the wire, which is also what the
  // controller predicts the re-proposal from.
  const Waypoint& entry = profile_->waypoints.front();
  const ReplanResult rr = replan_profile(params_, *path_, entry.t, std::min(entry.v, params_.v_max), neg_zone_,
                                         trrs_to_windows(r->trrs));
  if (rr.status == ReplanStatus::Infeasible || !rr.profile) return fail(now, FailureCause::Infeasible);
  // Feasible and fallback profiles are both proposed; a fallback makes the
  // controller postpone with later windows.
  return propose(now, *rr.profile);
}

std::vector<Outgoing> VehicleEndpoint::on_deadline(double now) {
  switch (state_) {
    case NegotiationState::AwaitingResponse:
    case NegotiationState::Proposing:
      return fail(now, FailureCause::Deadline);
    case NegotiationState::Agreed:
    case NegotiationState::BackupTriggered:
      return {};
    case NegotiationState::Idle:
      break;
  }
  throw ProtocolViolation("deadline before the negotiation started");
}

// ------------------------------------------------------------- controller

ControllerEndpoint::ControllerEndpoint(const IntersectionLayout& layout, ControllerParams params,
                                       VehicleParams model)
    : layout_(&layout), params_(params), model_(model) {
  params_.validate();
  model_.validate();
}

void ControllerEndpoint::resume() {
  failed_ = false;
  serving_.reset();
  pending_.clear();
  table_.clear();
}

void ControllerEndpoint::close_service(double now, bool accepted) {
  for (auto it = services_.rbegin(); it != services_.rend(); ++it) {
    if (it->cav == *serving_) {
      it->ended_at = now;
      it->accepted = accepted;
      break;
    }
  }
  serving_.reset();
}

std::vector<Outgoing> ControllerEndpoint::process(double now, const ProposalMsg& msg) {
  const int cav = static_cast<int>(msg.header.station_id);
  const Path& path = layout_->path(msg.status.path_id);
  Proposal prop;
  prop.cav = cav;
  prop.path = &path;
  prop.profile = decode_profile(msg, path);
  prop.length = msg.status.length_cm / 100.0;
  VehicleParams vp = model_;
  vp.length = prop.length;
  prop.vehicle = vp;
  prop.neg_zone = layout_->negotiation_zone(path.entry_lane);
  prop.wire = [&path](const MobilityProfile& p) { return quantize_profile(p, path); };

  const ValidationOutcome out = validate(table_, prop, params_);
  ResponseMsg r;
  r.header.station_id = msg.header.station_id;
  r.header.generation_time_ms = to_ms(now);
  r.header.sequence = static_cast<std::uint8_t>(msg.header.sequence + 1);
  r.status = msg.status;
  std::vector<Outgoing> sent;
  if (out.verdict == Verdict::Accept) {
    TableRow row = make_row(cav, prop.profile, path, prop.length, params_.widening);
    std::vector<ZoneWindow> granted;
    for (const auto& res : row.reservations) granted.push_back({res.zone, res.t_enter, res.t_exit});
    table_.commit(std::move(row));
    r.role = Role::Accept;
    r.trrs = windows_to_trrs(granted);
    sent.push_back({cav, r});
    close_service(now, true);
    auto more = serve_next(now);
    sent.insert(sent.end(), more.begin(), more.end());
  } else {
    r.role = Role::Revise;
    r.trrs = windows_to_trrs(out.windows);
    sent.push_back({cav, r});
  }
  return sent;
}

std::vector<Outgoing> ControllerEndpoint::serve_next(double now) {
  if (serving_ || pending_.empty() || failed_) return {};
  Pending next = std::move(pending_.front());
  pending_.pop_front();
  serving_ = static_cast<int>(next.msg.header.station_id);
  services_.push_back({*serving_, next.arrived, now, now, false});
  return process(now, next.msg);
}

std::vector<Outgoing> ControllerEndpoint::on_message(double now, const Message& msg) {
  if (const auto* p = std::get_if<ProposalMsg>(&msg)) {
    if (failed_) return {};  // coordination suspended
    const int cav = static_cast<int>(p->header.station_id);
    if (serving_ && *serving_ == cav) return process(now, *p);
    for (const auto& q : pending_)
      if (static_cast<int>(q.msg.header.station_id) == cav)
        throw ProtocolViolation("second proposal from a queued vehicle");
    if (table_.contains(cav)) throw ProtocolViolation("proposal from a vehicle already scheduled");
    // Admission order follows negotiation-zone entry, i.e. the first waypoint.
    const std::uint32_t entry = p->waypoints.empty() ? 0 : p->waypoints.front().time_ms;
    auto pos = std::find_if(pending_.begin(), pending_.end(), [&](const Pending& q) {
      return !q.msg.waypoints.empty() && q.msg.waypoints.front().time_ms > entry;
    });
    pending_.insert(pos, Pending{*p, now});
    return serve_next(now);
  }
  if (const auto* c = std::get_if<CancelMsg>(&msg)) {
    const int cav = static_cast<int>(c->header.station_id);
    failed_ = true;
    std::erase_if(pending_, [&](const Pending& q) { return static_cast<int>(q.msg.header.station_id) == cav; });
    if (serving_ && *serving_ == cav) close_service(now, false);
    // An Accept may have crossed the cancel; the vehicle will not follow it.
    if (table_.contains(cav)) table_.remove(cav);
    return {};
  }
  throw ProtocolViolation("controller received a response message");
}

}  // namespace moveover
