#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "moveover/queueing.hpp"

using namespace moveover;

namespace {

// Sample moments of a sum of n uniforms, drawn directly.
IrwinHall sampled_moments(int n, double lo, double hi, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < samples; ++i) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += u(rng);
    sum += s;
    sq += s * s;
  }
  const double mean = sum / samples;
  return {mean, sq / samples - mean * mean};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

MG1Params four_g_eight() {
  MG1Params p;
  p.lambda_a = 2.0;
  p.n_uniforms = 6;
  p.d_min = 0.020;
  p.d_max = 0.050;
  p.T_x = 0.035;
  return p;
}

}  // namespace

TEST_CASE("irwin-hall moments against sampling") {
  const IrwinHall a = irwin_hall_stats(2, 0.0, 0.010);
  CHECK(a.mean == doctest::Approx(0.010));
  CHECK(a.variance == doctest::Approx(1.6667e-5).epsilon(1e-4));
  const IrwinHall sa = sampled_moments(2, 0.0, 0.010, 10'000'000, 1);
  CHECK(rel(sa.mean, a.mean) < 1e-3);
  CHECK(rel(sa.variance, a.variance) < 5e-3);

  const IrwinHall b = irwin_hall_stats(6, 0.020, 0.050);
  CHECK(b.mean == doctest::Approx(0.210));
  CHECK(b.variance == doctest::Approx(4.5e-4));
  const IrwinHall sb = sampled_moments(6, 0.020, 0.050, 10'000'000, 2);
  CHECK(rel(sb.mean, b.mean) < 1e-3);
  CHECK(rel(sb.variance, b.variance) < 5e-3);

  const IrwinHall c = irwin_hall_stats(1, 2.0, 5.0);
  CHECK(c.mean == doctest::Approx(3.5));
  CHECK(c.variance == doctest::Approx(0.75));
  CHECK_THROWS_AS(irwin_hall_stats(0, 0.0, 1.0), QueueingError);
}

TEST_CASE("worked example") {
  const MG1Results r = analyze(four_g_eight());
  CHECK_FALSE(r.saturated);
  CHECK(r.rho_u == doctest::Approx(0.42));
  CHECK(r.T_q == doctest::Approx(0.0768).epsilon(1e-3));
  CHECK(r.W_q == doctest::Approx(0.1536).epsilon(1e-3));
  CHECK(r.T_neg == doctest::Approx(0.357).epsilon(1e-3));
  CHECK(r.T_j == doctest::Approx(r.T_q + r.T_s));

  const MG1Results mc = mc_simulate(four_g_eight(), 200'000.0, 11);
  CHECK(mc.completions > 100'000u);
  CHECK(rel(mc.T_q, r.T_q) < 0.05);
  CHECK(rel(mc.W_q, r.W_q) < 0.05);
  CHECK(rel(mc.rho_u, r.rho_u) < 0.01);
  // A second seed lands in the same band.
  const MG1Results mc2 = mc_simulate(four_g_eight(), 200'000.0, 12);
  CHECK(rel(mc2.T_q, r.T_q) < 0.05);
}

TEST_CASE("empty system") {
  MG1Params p = four_g_eight();
  p.lambda_a = 0.0;
  const MG1Results r = analyze(p);
  CHECK(r.rho_u == 0.0);
  CHECK(r.T_q == 0.0);
  CHECK(r.W_q == 0.0);
  CHECK(r.T_neg == doctest::Approx(2 * 0.035 + 0.210));
  const MG1Results mc = mc_simulate(p, 1000.0, 3);
  CHECK(mc.completions == 0u);
  CHECK(mc.T_q == 0.0);
  CHECK(mc.W_q == 0.0);
  CHECK(mc.rho_u == 0.0);
}

TEST_CASE("analytic model tracks simulation across loads") {
  for (double rho : {0.1, 0.2, 0.42, 0.6, 0.7}) {
    MG1Params p = four_g_eight();
    p.lambda_a = rho / 0.210;
    const MG1Results a = analyze(p);
    const double horizon = 400'000.0 / p.lambda_a;
    const MG1Results m = mc_simulate(p, horizon, 100 + static_cast<int>(rho * 100));
    INFO("rho = " << rho);
    CHECK(rel(m.T_q, a.T_q) < 0.05);
    CHECK(rel(m.W_q, a.W_q) < 0.05);
  }
  MG1Params p = four_g_eight();
  p.lambda_a = 0.9 / 0.210;
  const MG1Results a = analyze(p);
  const MG1Results m = mc_simulate(p, 2'000'000.0 / p.lambda_a, 7);
  CHECK(rel(m.T_q, a.T_q) < 0.10);
}

TEST_CASE("utilisation and saturation") {
  // rho is linear in lambda through the origin with slope T_s.
  for (double lambda : {0.5, 1.0, 3.0, 4.5}) {
    MG1Params p = four_g_eight();
    p.lambda_a = lambda;
    CHECK(analyze(p).rho_u == doctest::Approx(lambda * 0.210));
  }
  MG1Params p = four_g_eight();
  for (double lambda = 0.05; lambda * 0.210 <= 0.5; lambda += 0.05) {
    p.lambda_a = lambda;
    CHECK(analyze(p).W_q < 1.0);
  }
  p.lambda_a = 1.0 / 0.210;
  const MG1Results sat = analyze(p);
  CHECK(sat.saturated);
  CHECK(std::isinf(sat.T_q));
  p.lambda_a = -1.0;
  CHECK_THROWS_AS(analyze(p), QueueingError);
}

TEST_CASE("sweep csv") {
  const auto cases = standard_queue_cases();
  REQUIRE(cases.size() == 4u);
  CHECK(cases[3].network == "4G");
  CHECK(cases[3].messages == 8);
  CHECK(cases[3].params.n_uniforms == 6);
  CHECK(cases[0].params.T_x == doctest::Approx(0.005));
  const std::string csv = queue_sweep_csv(cases, {2.0, 10.0});
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "case,network,messages,lambda,rho,W_q,T_neg");
  bool found = false, saturated = false;
  while (std::getline(is, line)) {
    if (line.rfind("4G-8,4G,8,2,", 0) == 0) {
      found = true;
      CHECK(line.find("0.35") != std::string::npos);
    }
    if (line.rfind("4G-8,4G,8,10,", 0) == 0) saturated = line.find("inf,inf") != std::string::npos;
  }
  CHECK(found);
  CHECK(saturated);
}
