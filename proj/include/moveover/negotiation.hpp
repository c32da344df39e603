#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "moveover/codec.hpp"
#include "moveover/controller.hpp"
#include "moveover/layout.hpp"
#include "moveover/planner.hpp"

namespace moveover {

class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct DelayModel {
  double d_min_ms = 0.0;
  double d_max_ms = 0.0;
  std::string label = "ideal";

  static DelayModel ideal() { return {0.0, 0.0, "ideal"}; }
  static DelayModel five_g() { return {0.0, 10.0, "5G"}; }
  static DelayModel four_g() { return {20.0, 50.0, "4G"}; }
  // "ideal", "5G" or "4G" (case-insensitive).
  static DelayModel from_label(const std::string& label);
  void validate() const;
  double mean_ms() const { return (d_min_ms + d_max_ms) / 2.0; }
};

double sample_delay(const DelayModel& model, std::mt19937_64& rng);

// Controller endpoint address used in Outgoing::to.
inline constexpr int kController = -1;

struct Outgoing {
  int to = kController;
  Message msg;
};

// Profile <-> wire conversions. Both endpoints work on the quantised profile so
// that what the vehicle tracks is exactly what the controller reserved.
ProposalMsg make_proposal(int cav, double now, const MobilityProfile& profile, const Path& path,
                          const VehicleParams& vehicle, std::uint8_t sequence);
MobilityProfile decode_profile(const ProposalMsg& msg, const Path& path);
MobilityProfile quantize_profile(const MobilityProfile& profile, const Path& path);
std::vector<Trr> windows_to_trrs(const std::vector<ZoneWindow>& windows);
std::vector<ZoneWindow> trrs_to_windows(const std::vector<Trr>& trrs);

enum class NegotiationState { Idle, Proposing, AwaitingResponse, Agreed, BackupTriggered };
std::string to_string(NegotiationState s);

enum class FailureCause { None, Deadline, Infeasible, ExchangeCap };
std::string to_string(FailureCause c);

class VehicleEndpoint {
 public:
  VehicleEndpoint(int cav, VehicleParams params, const Path& path, NegotiationZone neg_zone,
                  int exchange_cap = 10);

  // Front bumper reaches the negotiation zone at time t0 with speed v0.
  std::vector<Outgoing> enter_zone(double t0, double v0);
  std::vector<Outgoing> on_message(double now, const Message& msg);
  // The negotiation zone ends; only meaningful before agreement.
  std::vector<Outgoing> on_deadline(double now);

  NegotiationState state() const { return state_; }
  FailureCause failure() const { return failure_; }
  // Proposals sent plus responses received.
  int messages() const { return messages_; }
  double deadline() const { return deadline_; }
  double started() const { return t0_; }
  double agreed_at() const { return agreed_at_; }
  // Last proposed profile; the committed one once Agreed.
  const std::optional<MobilityProfile>& profile() const { return profile_; }

 private:
  std::vector<Outgoing> propose(double now, const MobilityProfile& profile);
  std::vector<Outgoing> fail(double now, FailureCause cause);

  int cav_;
  VehicleParams params_;
  const Path* path_;
  NegotiationZone neg_zone_;
  int exchange_cap_;
  NegotiationState state_ = NegotiationState::Idle;
  FailureCause failure_ = FailureCause::None;
  int messages_ = 0;
  double t0_ = 0.0, v0_ = 0.0, deadline_ = 0.0, agreed_at_ = -1.0;
  std::optional<MobilityProfile> profile_;
};

struct ServiceRecord {
  int cav = 0;
  double queued_at = 0.0;   // first proposal received
  double started_at = 0.0;  // admitted into service
  double ended_at = 0.0;    // accepted or cancelled
  bool accepted = false;
};

// Controller side: FIFS serving queue in front of the scheduling table.
class ControllerEndpoint {
 public:
  ControllerEndpoint(const IntersectionLayout& layout, ControllerParams params, VehicleParams model);

  std::vector<Outgoing> on_message(double now, const Message& msg);
  void expire(double now) { table_.expire_rows(now); }

  // A failure was reported; stop serving until resume().
  bool failure_signalled() const { return failed_; }
  void resume();

  bool busy() const { return serving_.has_value(); }
  std::optional<int> serving() const { return serving_; }
  std::size_t pending() const { return pending_.size(); }
  const SchedulingTable& table() const { return table_; }
  SchedulingTable& table() { return table_; }
  const std::vector<ServiceRecord>& services() const { return services_; }

 private:
  struct Pending {
    ProposalMsg msg;
    double arrived = 0.0;
  };
  std::vector<Outgoing> process(double now, const ProposalMsg& msg);
  std::vector<Outgoing> serve_next(double now);
  void close_service(double now, bool accepted);

  const IntersectionLayout* layout_;
  ControllerParams params_;
  VehicleParams model_;
  SchedulingTable table_;
  std::optional<int> serving_;
  std::deque<Pending> pending_;
  std::vector<ServiceRecord> services_;
  bool failed_ = false;
};

}  // namespace moveover
