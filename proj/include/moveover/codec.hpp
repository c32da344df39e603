#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace moveover {

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wire layout (big-endian):
//   header        23 B  version u8, message id u8, station id u32, generation
//                       time u32 ms, reference x/y i32 cm, heading u16 (0.01 deg),
//                       position confidence u16, sequence u8
//   type + role    1 B  station type (high nibble), role (low nibble)
//   maneuver type  2 B  1 proposal, 2 response, 3 cancel
//   status        10 B  speed u16 cm/s, acceleration i16 cm/s^2, heading u16,
//                       length u16 cm, width u8 cm, path id u8
// followed by 11 B waypoints (time u32 ms, position i32 cm, speed u16 cm/s,
// flags u8), 9 B reservation intervals (zone u8, enter u32 ms, exit u32 ms;
// 0xFFFFFFFF = open) or the 1 B empty cancel descriptor.
inline constexpr std::size_t kHeaderBytes = 23;
inline constexpr std::size_t kFixedBytes = 36;
inline constexpr std::size_t kWaypointBytes = 11;
inline constexpr std::size_t kTrrBytes = 9;
inline constexpr std::size_t kCancelBytes = 37;
inline constexpr std::size_t kMaxWaypointFields = 40;
inline constexpr std::size_t kMaxTrrs = 10;
inline constexpr std::uint32_t kOpenTime = 0xFFFFFFFFu;

enum class ManeuverType : std::uint16_t { Proposal = 1, Response = 2, Cancel = 3 };

// Role nibble of the type+role byte.
enum class Role : std::uint8_t { Propose = 0, Accept = 1, Revise = 2, Cancel = 3 };

struct Header {
  std::uint8_t version = 1;
  std::uint8_t message_id = 0;
  std::uint32_t station_id = 0;
  std::uint32_t generation_time_ms = 0;
  std::int32_t ref_x_cm = 0;
  std::int32_t ref_y_cm = 0;
  std::uint16_t heading = 0;
  std::uint16_t confidence = 0;
  std::uint8_t sequence = 0;
  bool operator==(const Header&) const = default;
};

struct VehicleStatus {
  std::uint16_t speed_cms = 0;
  std::int16_t accel_cms2 = 0;
  std::uint16_t heading = 0;
  std::uint16_t length_cm = 0;
  std::uint8_t width_cm = 0;
  std::uint8_t path_id = 0;
  bool operator==(const VehicleStatus&) const = default;
};

struct WaypointField {
  std::uint32_t time_ms = 0;
  std::int32_t position_cm = 0;
  std::uint16_t speed_cms = 0;
  std::uint8_t flags = 0;
  bool operator==(const WaypointField&) const = default;
};

struct Trr {
  std::uint8_t zone = 0;
  std::uint32_t enter_min_ms = 0;
  std::uint32_t exit_max_ms = kOpenTime;
  bool operator==(const Trr&) const = default;
};

struct ProposalMsg {
  Header header;
  std::uint8_t station_type = 5;  // passenger car
  VehicleStatus status;
  std::vector<WaypointField> waypoints;
  bool operator==(const ProposalMsg&) const = default;
};

struct ResponseMsg {
  Header header;
  Role role = Role::Accept;  // Accept or Revise
  VehicleStatus status;
  std::vector<Trr> trrs;
  bool operator==(const ResponseMsg&) const = default;
};

struct CancelMsg {
  Header header;
  std::uint8_t station_type = 5;
  VehicleStatus status;
  std::uint8_t descriptor = 0;
  bool operator==(const CancelMsg&) const = default;
};

using Message = std::variant<ProposalMsg, ResponseMsg, CancelMsg>;

std::vector<std::uint8_t> encode(const Message& msg);
Message decode(std::span<const std::uint8_t> bytes);
std::size_t encoded_size(const Message& msg);
std::string hex_dump(std::span<const std::uint8_t> bytes);

// Quantisation helpers shared by the protocol endpoints.
std::uint32_t to_ms(double seconds);
double from_ms(std::uint32_t ms);
std::int32_t to_cm(double metres);
std::uint16_t to_cms(double metres_per_second);

}  // namespace moveover
