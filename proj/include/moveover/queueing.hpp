#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace moveover {

class QueueingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MG1Params {
  double lambda_a = 0.0;  // negotiation arrivals per second
  int n_uniforms = 6;     // message legs summed into one service time
  double d_min = 0.020;   // seconds, per leg
  double d_max = 0.050;
  double T_x = 0.035;     // mean one-way delay, seconds

  void validate() const;
};

struct MG1Results {
  bool saturated = false;  // rho_u >= 1: T_q, W_q, T_j and T_neg are meaningless
  double rho_u = 0.0;
  double T_s = 0.0;
  double sigma_s2 = 0.0;
  double T_q = 0.0;
  double W_q = 0.0;
  double T_j = 0.0;
  double T_neg = 0.0;
  std::uint64_t completions = 0;  // only set by mc_simulate
};

struct IrwinHall {
  double mean = 0.0;
  double variance = 0.0;
};

IrwinHall irwin_hall_stats(int n, double d_min, double d_max);
MG1Results analyze(const MG1Params& params);
// Event-driven single-server FCFS simulation with Poisson arrivals and
// Irwin-Hall service; statistics cover customers arriving before `horizon`.
MG1Results mc_simulate(const MG1Params& params, double horizon, std::uint64_t seed);

struct QueueCase {
  std::string network;  // "5G" or "4G"
  int messages = 4;
  MG1Params params;     // lambda_a is overwritten by the sweep
};

// The four network x message-count cases of the controller load study.
std::vector<QueueCase> standard_queue_cases();
// Header "case,network,messages,lambda,rho,W_q,T_neg"; saturated rows print "inf".
std::string queue_sweep_csv(const std::vector<QueueCase>& cases, const std::vector<double>& lambdas);

}  // namespace moveover
