#include "moveover/queueing.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>

namespace moveover {

void MG1Params::validate() const {
  if (!(lambda_a >= 0.0)) throw QueueingError("lambda_a must be >= 0");
  if (n_uniforms < 1) throw QueueingError("n_uniforms must be >= 1");
  if (!(d_min >= 0.0) || !(d_max >= d_min)) throw QueueingError("need 0 <= d_min <= d_max");
  if (!(T_x >= 0.0)) throw QueueingError("T_x must be >= 0");
}

IrwinHall irwin_hall_stats(int n, double d_min, double d_max) {
  if (n < 1) throw QueueingError("n must be >= 1");
  const double w = d_max - d_min;
  return {n * (d_min + d_max) / 2.0, n * w * w / 12.0};
}

MG1Results analyze(const MG1Params& params) {
  params.validate();
  const IrwinHall s = irwin_hall_stats(params.n_uniforms, params.d_min, params.d_max);
  MG1Results r;
  r.T_s = s.mean;
  r.sigma_s2 = s.variance;
  r.rho_u = params.lambda_a * s.mean;
  if (r.rho_u >= 1.0) {
    r.saturated = true;
    const double inf = std::numeric_limits<double>::infinity();
    r.T_q = r.W_q = r.T_j = r.T_neg = inf;
    return r;
  }
  r.T_q = params.lambda_a * (s.mean * s.mean + s.variance) / (2.0 * (1.0 - r.rho_u));
  r.W_q = params.lambda_a * r.T_q;
  r.T_j = r.T_q + r.T_s;
  r.T_neg = 2.0 * params.T_x + r.T_q + r.T_s;
  return r;
}

MG1Results mc_simulate(const MG1Params& params, double horizon, std::uint64_t seed) {
  params.validate();
  if (!(horizon > 0.0)) throw QueueingError("horizon must be > 0");
  MG1Results r;
  if (params.lambda_a == 0.0) return r;

  std::mt19937_64 arrivals_rng(seed);
  std::mt19937_64 service_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::exponential_distribution<double> gap(params.lambda_a);
  std::uniform_real_distribution<double> leg(params.d_min, params.d_max);

  // Events: next arrival vs departure of the customer in service. Waiting
  // customers keep their arrival times so the queue length integral and the
  // per-customer waits come from the same trajectory.
  std::deque<double> waiting;
  double clock = 0.0;
  double next_arrival = gap(arrivals_rng);
  double departure = std::numeric_limits<double>::infinity();
  double busy_time = 0.0, queue_area = 0.0, wait_sum = 0.0, service_sum = 0.0, service_sq = 0.0;
  std::uint64_t served = 0;
  bool in_service = false;

  auto start_service = [&](double now, double arrived) {
    double s = 0.0;
    for (int i = 0; i < params.n_uniforms; ++i) s += leg(service_rng);
    wait_sum += now - arrived;
    service_sum += s;
    service_sq += s * s;
    ++served;
    in_service = true;
    departure = now + s;
  };

  while (true) {
    const bool arrival_next = next_arrival <= departure && next_arrival < horizon;
    const double t = arrival_next ? next_arrival : departure;
    if (!std::isfinite(t)) break;
    queue_area += waiting.size() * (t - clock);
    if (in_service) busy_time += t - clock;
    clock = t;
    if (arrival_next) {
      if (!in_service) {
        start_service(clock, clock);
      } else {
        waiting.push_back(clock);
      }
      next_arrival = clock + gap(arrivals_rng);
    } else {
      in_service = false;
      departure = std::numeric_limits<double>::infinity();
      if (!waiting.empty()) {
        const double a = waiting.front();
        waiting.pop_front();
        start_service(clock, a);
      }
    }
  }

  r.completions = served;
  r.rho_u = busy_time / clock;
  r.T_s = service_sum / served;
  r.sigma_s2 = service_sq / served - r.T_s * r.T_s;
  r.T_q = wait_sum / served;
  r.W_q = queue_area / clock;
  r.T_j = r.T_q + r.T_s;
  r.T_neg = 2.0 * params.T_x + r.T_q + r.T_s;
  return r;
}

std::vector<QueueCase> standard_queue_cases() {
  std::vector<QueueCase> out;
  struct Net {
    const char* name;
    double dmin, dmax;
  };
  for (const Net& n : {Net{"5G", 0.0, 0.010}, Net{"4G", 0.020, 0.050}}) {
    const double dmin = n.dmin, dmax = n.dmax;
    for (int messages : {4, 8}) {
      QueueCase c;
      c.network = n.name;
      c.messages = messages;
      c.params.n_uniforms = messages - 2;  // first and last legs are outside the service
      c.params.d_min = dmin;
      c.params.d_max = dmax;
      c.params.T_x = (dmin + dmax) / 2.0;
      out.push_back(c);
    }
  }
  return out;
}

std::string queue_sweep_csv(const std::vector<QueueCase>& cases, const std::vector<double>& lambdas) {
  std::ostringstream os;
  os.precision(6);
  os << "case,network,messages,lambda,rho,W_q,T_neg\n";
  for (const auto& c : cases) {
    for (double lambda : lambdas) {
      MG1Params p = c.params;
      p.lambda_a = lambda;
      const MG1Results r = analyze(p);
      os << c.network << '-' << c.messages << ',' << c.network << ',' << c.messages << ',' << lambda
         << ',' << r.rho_u << ',';
      if (r.saturated) {
        os << "inf,inf\n";
      } else {
        os << r.W_q << ',' << r.T_neg << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace moveover
