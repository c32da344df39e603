// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "moveover/codec.hpp"
#include "moveover/experiment.hpp"
#include "moveover/layout.hpp"
#include "moveover/metrics.hpp"
#include "moveover/queueing.hpp"
#include "moveover/simulator.hpp"

using namespace moveover;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "NOT ") << what << "; ";
  }
};

std::string fmt(double x, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};
constexpr double kDuration = 1800.0;

ScenarioConfig scenario(LayoutKind k, Method m, const DelayModel& net = DelayModel::ideal()) {
  ScenarioConfig c;
  c.layout = k;
  c.method = m;
  c.network = net;
  c.duration = kDuration;
  return c;
}

double mean_completed(const RunMetrics& m) {
  const auto tt = travel_times(m, true);
  return tt.empty() ? 0.0 : std::accumulate(tt.begin(), tt.end(), 0.0) / tt.size();
}

// Runs jobs on the available cores; results keep the submission order.
template <class T>
std::vector<T> parallel_map(const std::vector<std::function<T()>>& jobs) {
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<T> out(jobs.size());
  for (std::size_t start = 0; start < jobs.size(); start += workers) {
    std::vector<std::future<T>> batch;
    for (std::size_t i = start; i < std::min(jobs.size(), start + workers); ++i)
      batch.push_back(std::async(std::launch::async, jobs[i]));
    for (std::size_t i = 0; i < batch.size(); ++i) out[start + i] = batch[i].get();
  }
  return out;
}

// ---------------------------------------------------------------- 1
Outcome zone_design() {
  Outcome v;
  const double v50 = 13.889;
  const double d = min_negotiation_distance(v50, 4.5);
  v.require(std::abs(d - 21.43) <= 0.01, "d_neg(13.889, 4.5) = " + fmt(d, 4) + " within 21.43 +- 0.01");
  const double kmh = max_negotiation_speed(10.0, 4.5) * 3.6;
  v.require(std::abs(kmh - 34.2) <= 0.1, "speed for d = 10 m = " + fmt(kmh, 3) + " km/h within 34.2 +- 0.1");
  const double l1 = min_negotiation_length(v50, 0.03), l2 = min_negotiation_length(v50, 0.4);
  v.require(std::abs(l1 - 0.417) <= 0.001, "l_neg(0.03) = " + fmt(l1, 4));
  v.require(std::abs(l2 - 5.556) <= 0.001, "l_neg(0.4) = " + fmt(l2, 4));
  return v;
}

// ---------------------------------------------------------------- 2
Outcome queueing() {
  Outcome v;
  MG1Params base;  // 4G, 8 messages: six 20-50 ms legs
  const double T_s = analyze(base).T_s;
  for (double rho : {0.2, 0.42, 0.6}) {
    MG1Params p = base;
    p.lambda_a = rho / T_s;
    const MG1Results a = analyze(p);
    const MG1Results m = mc_simulate(p, 1.2e5 / p.lambda_a, 1000 + static_cast<int>(rho * 100));
    const double eq = std::abs(m.T_q - a.T_q) / a.T_q, ew = std::abs(m.W_q - a.W_q) / a.W_q;
    v.require(m.completions >= 100000 && eq < 0.05 && ew < 0.05,
              "rho " + fmt(rho, 2) + ": n=" + std::to_string(m.completions) + " err T_q " + fmt(100 * eq, 2) +
                  "% W_q " + fmt(100 * ew, 2) + "%");
  }
  // rho_u against lambda over a grid: least-squares R^2.
  std::vector<double> xs, ys;
  for (double l = 0.1; l <= 4.5; l += 0.1) {
    MG1Params p = base;
    p.lambda_a = l;
    xs.push_back(l);
    ys.push_back(analyze(p).rho_u);
  }
  const double n = xs.size();
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n, my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  v.require(r2 > 0.9999, "rho_u linear in lambda, R^2 = " + fmt(r2, 8));
  double worst = 0.0;
  for (const auto& c : standard_queue_cases()) {
    const double ts = analyze(c.params).T_s;
    for (int i = 1; i <= 50; ++i) {
      MG1Params p = c.params;
      p.lambda_a = (0.01 * i) / ts;
      worst = std::max(worst, analyze(p).W_q);
    }
  }
  v.require(worst < 1.0, "max W_q over rho <= 0.5 = " + fmt(worst, 4));
  return v;
}

// ---------------------------------------------------------------- 3
Outcome codec() {
  Outcome v;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::uint32_t> u32;
  auto b8 = [&] { return static_cast<std::uint8_t>(u32(rng)); };
  auto b16 = [&] { return static_cast<std::uint16_t>(u32(rng)); };
  auto header = [&] {
    Header h;
    h.version = b8();
    h.message_id = b8();
    h.station_id = u32(rng);
    h.generation_time_ms = u32(rng);
    h.ref_x_cm = static_cast<std::int32_t>(u32(rng));
    h.ref_y_cm = static_cast<std::int32_t>(u32(rng));
    h.heading = b16();
    h.confidence = b16();
    h.sequence = b8();
    return h;
  };
  auto status = [&] {
    VehicleStatus s;
    s.speed_cms = b16();
    s.accel_cms2 = static_cast<std::int16_t>(b16());
    s.heading = b16();
    s.length_cm = b16();
    s.width_cm = b8();
    s.path_id = b8();
    return s;
  };
  int ok = 0;
  const int total = 10000;
  for (int i = 0; i < total; ++i) {
    Message m;
    switch (i % 3) {
      case 0: {
        ProposalMsg p;
        p.header = header();
        p.station_type = b8() & 0x0F;
        p.status = status();
        p.waypoints.resize(u32(rng) % (kMaxWaypointFields + 1));
        for (auto& w : p.waypoints) w = {u32(rng), static_cast<std::int32_t>(u32(rng)), b16(), b8()};
        m = p;
        break;
      }
      case 1: {
        ResponseMsg r;
        r.header = header();
        r.role = (u32(rng) & 1) ? Role::Accept : Role::Revise;
        r.status = status();
        r.trrs.resize(u32(rng) % (kMaxTrrs + 1));
        for (auto& t : r.trrs) t = {b8(), u32(rng), (u32(rng) & 3) ? u32(rng) : kOpenTime};
        m = r;
        break;
      }
      default: {
        CancelMsg c;
        c.header = header();
        c.station_type = b8() & 0x0F;
        c.status = status();
        c.descriptor = b8();
        m = c;
      }
    }
    const auto bytes = encode(m);
    ok += decode(bytes) == m && bytes.size() == encoded_size(m);
  }
  v.require(ok == total, std::to_string(ok) + "/" + std::to_string(total) + " random messages round-trip");
  ProposalMsg p;
  p.waypoints.resize(kMaxWaypointFields);
  ResponseMsg r;
  r.trrs.resize(kMaxTrrs);
  const auto sp = encode(p).size(), sr = encode(r).size(), sc = encode(CancelMsg{}).size();
  v.require(sp == 476 && sp <= 500, "proposal " + std::to_string(sp) + " B");
  v.require(sr == 126 && sr <= 130, "response " + std::to_string(sr) + " B");
  v.require(sc == 37 && sc <= 40, "cancel " + std::to_string(sc) + " B");
  return v;
}

// ---------------------------------------------------------------- 4
struct Combo {
  LayoutKind layout;
  Method method;
  DelayModel net;
};

std::vector<Combo> applicable(LayoutKind k) {
  std::vector<Combo> out;
  for (Method m : {Method::Priority, Method::TrafficLight, Method::Fifo}) {
    if (k == LayoutKind::Roundabout && m != Method::Priority) continue;
    out.push_back({k, m, DelayModel::ideal()});
  }
  for (const auto& n : {DelayModel::ideal(), DelayModel::five_g(), DelayModel::four_g()})
    out.push_back({k, Method::Moveover, n});
  return out;
}

Outcome safety() {
  Outcome v;
  const std::map<LayoutKind, std::vector<double>> densities{{LayoutKind::FourWay1L, {0.05, 0.1, 0.15}},
                                                            {LayoutKind::ThreeWay1L, {0.05, 0.1, 0.2}},
                                                            {LayoutKind::Roundabout, {0.05, 0.1, 0.2}},
                                                            {LayoutKind::FourWay2L, {0.1, 0.2, 0.3}}};
  std::vector<std::function<SafetyReport()>> jobs;
  for (const auto& [k, ds] : densities)
    for (const Combo& c : applicable(k))
      for (double d : ds)
        for (auto seed : kSeeds)
          jobs.push_back([c, d, seed] {
            ScenarioConfig s = scenario(c.layout, c.method, c.net);
            s.rate = d;
            s.seed = seed;
            return run(s).metrics.safety;
          });
  const auto reports = parallel_map(jobs);
  std::uint64_t co = 0, tv = 0, tp = 0;
  double trk = 0.0;
  for (const auto& r : reports) {
    co += r.co_occupancy;
    tv += r.table_violations;
    tp += r.teleports;
    trk = std::max(trk, r.max_tracking_error);
  }
  v.detail << reports.size() << " runs; ";
  v.require(co == 0, "co-occupancy events = " + std::to_string(co));
  v.require(tv == 0, "table violations = " + std::to_string(tv));
  v.detail << "teleports " << tp << ", max tracking error " << fmt(trk, 4) << " m; ";
  return v;
}

// ---------------------------------------------------------------- 5
Outcome non_stop() {
  Outcome v;
  for (auto seed : kSeeds) {
    ScenarioConfig s = scenario(LayoutKind::FourWay1L, Method::Moveover);
    s.rate = 0.1;
    s.seed = seed;
    const RunMetrics m = run(s).metrics;
    std::size_t done = 0, kept = 0;
    for (const auto& r : m.vehicles) {
      if (!r.completed) continue;
      ++done;
      kept += r.min_speed >= s.vehicle.v_min - 1e-9;
    }
    const double share = done ? static_cast<double>(kept) / done : 0.0;
    v.require(share >= 0.95 && m.backups.empty(), "seed " + std::to_string(seed) + ": " + fmt(100 * share, 1) +
                                                       "% keep v >= v_min, backups " +
                                                       std::to_string(m.backups.size()));
  }
  return v;
}

// ---------------------------------------------------------------- 6
Outcome benchmark_ordering() {
  Outcome v;
  std::vector<std::pair<std::string, ScenarioConfig>> cases{
      {"moveover-ideal", scenario(LayoutKind::FourWay1L, Method::Moveover)},
      {"moveover-5G", scenario(LayoutKind::FourWay1L, Method::Moveover, DelayModel::five_g())},
      {"fifo", scenario(LayoutKind::FourWay1L, Method::Fifo)},
      {"traffic-light", scenario(LayoutKind::FourWay1L, Method::TrafficLight)},
      {"priority", scenario(LayoutKind::FourWay1L, Method::Priority)}};
  std::vector<std::function<double()>> jobs;
  for (const auto& c : cases) jobs.push_back([cfg = c.second] { return mean_completed(run_pooled(cfg, 0.1, kSeeds)); });
  const auto means = parallel_map(jobs);
  std::map<std::string, double> mt;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    mt[cases[i].first] = means[i];
    v.detail << cases[i].first << " " << fmt(means[i], 1) << " s; ";
  }
  const double ideal = mt["moveover-ideal"];
  v.require(ideal < mt["fifo"], "ideal < fifo");
  v.require(ideal < mt["traffic-light"], "ideal < traffic light");
  v.require(ideal < mt["priority"], "ideal < priority");
  v.require(std::abs(mt["moveover-5G"] - ideal) <= 0.1 * ideal, "5G within 10% of ideal");
  return v;
}

// ---------------------------------------------------------------- 8 and 7
struct Capacities {
  std::map<std::string, CapacityResult> result;
  std::map<LayoutKind, double> threshold;
};

std::string key(LayoutKind k, Method m, const DelayModel& n) {
  return std::string(to_string(k)) + "/" + to_string(m) + "/" + n.label;
}

std::vector<double> grid_for(LayoutKind k) {
  std::vector<double> g;
  const bool wide = k == LayoutKind::FourWay2L;
  const int n = k == LayoutKind::Roundabout ? 16 : 12;
  for (int i = 1; i <= n; ++i) g.push_back(std::round(i * (wide ? 0.05 : 0.025) * 1000.0) / 1000.0);
  return g;
}

const Capacities& capacities() {
  static Capacities c = [] {
    Capacities out;
    const std::vector<Combo> sweeps{
        {LayoutKind::FourWay1L, Method::Moveover, DelayModel::ideal()},
        {LayoutKind::FourWay1L, Method::Moveover, DelayModel::five_g()},
        {LayoutKind::FourWay1L, Method::TrafficLight, DelayModel::ideal()},
        {LayoutKind::ThreeWay1L, Method::Moveover, DelayModel::ideal()},
        {LayoutKind::ThreeWay1L, Method::Moveover, DelayModel::five_g()},
        {LayoutKind::ThreeWay1L, Method::Fifo, DelayModel::ideal()},
        {LayoutKind::Roundabout, Method::Moveover, DelayModel::five_g()},
        {LayoutKind::FourWay2L, Method::Moveover, DelayModel::five_g()},
        {LayoutKind::FourWay2L, Method::Moveover, DelayModel::four_g()},
    };
    const bool parallel = std::thread::hardware_concurrency() > 1;
    for (const Combo& s : sweeps) {
      SweepSettings w;
      w.densities = grid_for(s.layout);
      w.seeds = kSeeds;
      const ScenarioConfig cfg = scenario(s.layout, s.method, s.net);
      if (!out.threshold.count(s.layout)) out.threshold[s.layout] = capacity_threshold(cfg, w);
      out.result[key(s.layout, s.method, s.net)] = sweep_capacity(cfg, w, out.threshold[s.layout], parallel);
    }
    return out;
  }();
  return c;
}

std::string show(const CapacityResult& r) {
  std::string s = r.capacity ? fmt(*r.capacity, 3) : std::string("below grid");
  if (!r.monotone) s += " (non-monotone)";
  return s;
}

Outcome capacity_ordering() {
  Outcome v;
  const Capacities& c = capacities();
  for (const auto& [k, t] : c.threshold) v.detail << "threshold " << to_string(k) << " " << fmt(t, 1) << " s; ";
  for (const auto& [name, r] : c.result) v.detail << name << " " << show(r) << "; ";
  auto cap = [&](LayoutKind k, Method m, const DelayModel& n) {
    return c.result.at(key(k, m, n)).capacity.value_or(0.0);
  };
  v.require(cap(LayoutKind::FourWay1L, Method::Moveover, DelayModel::ideal()) >
                cap(LayoutKind::FourWay1L, Method::TrafficLight, DelayModel::ideal()),
            "four-way-1L ideal > traffic light");
  v.require(cap(LayoutKind::ThreeWay1L, Method::Moveover, DelayModel::ideal()) >
                cap(LayoutKind::ThreeWay1L, Method::Fifo, DelayModel::ideal()),
            "three-way-1L ideal > fifo");
  v.require(cap(LayoutKind::FourWay2L, Method::Moveover, DelayModel::four_g()) <
                cap(LayoutKind::FourWay2L, Method::Moveover, DelayModel::five_g()),
            "four-way-2L 4G < 5G");
  return v;
}

Outcome messages() {
  Outcome v;
  const Capacities& c = capacities();
  for (LayoutKind k : {LayoutKind::FourWay1L, LayoutKind::ThreeWay1L, LayoutKind::Roundabout, LayoutKind::FourWay2L}) {
    const auto& r = c.result.at(key(k, Method::Moveover, DelayModel::five_g()));
    if (!r.capacity) {
      v.require(false, std::string(to_string(k)) + " has no 5G capacity on the grid");
      continue;
    }
    const RunMetrics m = run_pooled(scenario(k, Method::Moveover, DelayModel::five_g()), *r.capacity, kSeeds);
    const auto h = message_histogram(m);
    const double p4 = share_at_most(h, 4);
    const int max_count = h.rbegin()->first;
    v.require(p4 >= 0.85 && max_count <= 10, std::string(to_string(k)) + " 5G at " + fmt(*r.capacity, 3) +
                                                 ": P(<=4) " + fmt(p4, 3) + ", max " + std::to_string(max_count));
  }
  return v;
}

// ---------------------------------------------------------------- 9
Outcome determinism() {
  Outcome v;
  std::vector<ScenarioConfig> cfgs{scenario(LayoutKind::FourWay2L, Method::Moveover, DelayModel::four_g()),
                                   scenario(LayoutKind::Roundabout, Method::Moveover, DelayModel::five_g()),
                                   scenario(LayoutKind::FourWay1L, Method::TrafficLight)};
  cfgs[0].rate = 0.3;
  cfgs[1].rate = 0.15;
  cfgs[2].rate = 0.1;
  for (auto& c : cfgs) {
    c.seed = 11;
    c.event_log = true;
    auto files = [&c] {
      const RunOutput r = run(c);
      return vehicles_csv(r.metrics) + summary_json(r.metrics, "x") + events_csv(r.events);
    };
    const std::string a = files(), b = files();
    v.require(a == b && !a.empty(), key(c.layout, c.method, c.network) + " identical (" +
                                        std::to_string(a.size()) + " B)");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, zone_design}, {2, queueing},          {3, codec},    {4, safety},     {5, non_stop},
      {6, benchmark_ordering}, {7, messages}, {8, capacity_ordering}, {9, determinism}};
  int failed = 0;
  for (const auto& [n, fn] : criteria) {
    if (!only.empty() && !only.count(n)) continue;
    Outcome v = fn();
    failed += !v.pass;
    std::printf("criterion %d: %s  %s\n", n, v.pass ? "PASS" : "FAIL", v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed;
}
