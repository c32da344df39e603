#include "moveover/codec.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace moveover {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v >> 8));
    u8(static_cast<std::uint8_t>(v));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }
  void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    if (pos_ >= in_.size()) throw CodecError("truncated message");
    return in_[pos_++];
  }
  std::uint16_t u16() {
    const std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void put_header(Writer& w, const Header& h) {
  w.u8(h.version);
  w.u8(h.message_id);
  w.u32(h.station_id);
  w.u32(h.generation_time_ms);
  w.i32(h.ref_x_cm);
  w.i32(h.ref_y_cm);
  w.u16(h.heading);
  w.u16(h.confidence);
  w.u8(h.sequence);
}

Header get_header(Reader& r) {
  Header h;
  h.version = r.u8();
  h.message_id = r.u8();
  h.station_id = r.u32();
  h.generation_time_ms = r.u32();
  h.ref_x_cm = r.i32();
  h.ref_y_cm = r.i32();
  h.heading = r.u16();
  h.confidence = r.u16();
  h.sequence = r.u8();
  return h;
}

void put_status(Writer& w, const VehicleStatus& s) {
  w.u16(s.speed_cms);
  w.i16(s.accel_cms2);
  w.u16(s.heading);
  w.u16(s.length_cm);
  w.u8(s.width_cm);
  w.u8(s.path_id);
}

VehicleStatus get_status(Reader& r) {
  VehicleStatus s;
  s.speed_cms = r.u16();
  s.accel_cms2 = r.i16();
  s.heading = r.u16();
  s.length_cm = r.u16();
  s.width_cm = r.u8();
  s.path_id = r.u8();
  return s;
}

std::uint8_t type_role(std::uint8_t station_type, Role role) {
  if (station_type > 0x0F) throw CodecError("station type out of range");
  return static_cast<std::uint8_t>((station_type << 4) | static_cast<std::uint8_t>(role));
}

}  // namespace

std::vector<std::uint8_t> encode(const Message& msg) {
  Writer w;
  if (const auto* p = std::get_if<ProposalMsg>(&msg)) {
    if (p->waypoints.size() > kMaxWaypointFields) throw CodecError("too many waypoints");
    put_header(w, p->header);
    w.u8(type_role(p->station_type, Role::Propose));
    w.u16(static_cast<std::uint16_t>(ManeuverType::Proposal));
    put_status(w, p->status);
    for (const auto& wp : p->waypoints) {
      w.u32(wp.time_ms);
      w.i32(wp.position_cm);
      w.u16(wp.speed_cms);
      w.u8(wp.flags);
    }
  } else if (const auto* r = std::get_if<ResponseMsg>(&msg)) {
    if (r->trrs.size() > kMaxTrrs) throw CodecError("too many reservation intervals");
    if (r->role != Role::Accept && r->role != Role::Revise) throw CodecError("invalid response role");
    put_header(w, r->header);
    w.u8(type_role(0, r->role));
    w.u16(static_cast<std::uint16_t>(ManeuverType::Response));
    put_status(w, r->status);
    for (const auto& t : r->trrs) {
      w.u8(t.zone);
      w.u32(t.enter_min_ms);
      w.u32(t.exit_max_ms);
    }
  } else {
    const auto& c = std::get<CancelMsg>(msg);
    put_header(w, c.header);
    w.u8(type_role(c.station_type, Role::Cancel));
    w.u16(static_cast<std::uint16_t>(ManeuverType::Cancel));
    put_status(w, c.status);
    w.u8(c.descriptor);
  }
  return w.take();
}

Message decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedBytes) throw CodecError("truncated message");
  Reader r(bytes);
  Header h = get_header(r);
  const std::uint8_t tr = r.u8();
  const std::uint16_t type = r.u16();
  VehicleStatus status = get_status(r);
  const std::uint8_t station_type = tr >> 4;
  const auto role = static_cast<Role>(tr & 0x0F);
  switch (type) {
    case static_cast<std::uint16_t>(ManeuverType::Proposal): {
      if (r.remaining() % kWaypointBytes != 0) throw CodecError("truncated waypoint list");
      if (r.remaining() / kWaypointBytes > kMaxWaypointFields) throw CodecError("too many waypoints");
      ProposalMsg p;
      p.header = h;
      p.station_type = station_type;
      p.status = status;
      while (r.remaining() > 0) {
        WaypointField wp;
        wp.time_ms = r.u32();
        wp.position_cm = r.i32();
        wp.speed_cms = r.u16();
        wp.flags = r.u8();
        p.waypoints.push_back(wp);
      }
      return p;
    }
    case static_cast<std::uint16_t>(ManeuverType::Response): {
      if (role != Role::Accept && role != Role::Revise) throw CodecError("invalid response role");
      if (r.remaining() % kTrrBytes != 0) throw CodecError("truncated reservation list");
      if (r.remaining() / kTrrBytes > kMaxTrrs) throw CodecError("too many reservation intervals");
      ResponseMsg m;
      m.header = h;
      m.role = role;
      m.status = status;
      while (r.remaining() > 0) {
        Trr t;
        t.zone = r.u8();
        t.enter_min_ms = r.u32();
        t.exit_max_ms = r.u32();
        m.trrs.push_back(t);
      }
      return m;
    }
    case static_cast<std::uint16_t>(ManeuverType::Cancel): {
      if (r.remaining() != 1) throw CodecError(r.remaining() == 0 ? "truncated message" : "trailing bytes");
      CancelMsg c;
      c.header = h;
      c.station_type = station_type;
      c.status = status;
      c.descriptor = r.u8();
      return c;
    }
    default:
      throw CodecError("unknown maneuver type " + std::to_string(type));
  }
}

std::size_t encoded_size(const Message& msg) {
  if (const auto* p = std::get_if<ProposalMsg>(&msg)) return kFixedBytes + kWaypointBytes * p->waypoints.size();
  if (const auto* r = std::get_if<ResponseMsg>(&msg)) return kFixedBytes + kTrrBytes * r->trrs.size();
  return kCancelBytes;
}

std::string hex_dump(std::span<const std::uint8_t> bytes) {
  std::string out;
  char buf[24];
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i % 16 == 0) {
      if (i) out += '\n';
      std::snprintf(buf, sizeof buf, "%04zx:", i);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, " %02x", bytes[i]);
    out += buf;
  }
  return out;
}

std::uint32_t to_ms(double seconds) {
  if (!(seconds >= 0.0)) throw CodecError("time must be non-negative");
  const double ms = std::round(seconds * 1000.0);
  if (ms >= static_cast<double>(kOpenTime)) throw CodecError("time out of range");
  return static_cast<std::uint32_t>(ms);
}

double from_ms(std::uint32_t ms) { return ms / 1000.0; }

std::int32_t to_cm(double metres) {
  const double cm = std::round(metres * 100.0);
  if (std::abs(cm) > std::numeric_limits<std::int32_t>::max()) throw CodecError("position out of range");
  return static_cast<std::int32_t>(cm);
}

std::uint16_t to_cms(double metres_per_second) {
  const double cms = std::round(metres_per_second * 100.0);
  if (cms < 0.0 || cms > 65535.0) throw CodecError("speed out of range");
  return static_cast<std::uint16_t>(cms);
}

}  // namespace moveover
