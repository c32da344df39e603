#include "moveover/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace moveover {

double EmissionModel::rate(double v, double a) const {
  const double r = c0 + c1 * v * a + c2 * v * a * a + c3 * v + c4 * v * v + c5 * v * v * v;
  return std::max(0.0, r);
}

double emissions(const std::vector<KinematicSample>& samples, double dt, const EmissionModel& model) {
  double grams = 0.0;
  for (const auto& s : samples) grams += model.rate(s.v, s.a) * dt;
  return grams / 1000.0;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw MetricsError("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw MetricsError("percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * values.size()));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

BoxStats box_stats(const std::vector<double>& values) {
  BoxStats b;
  b.count = values.size();
  if (values.empty()) return b;
  b.min = *std::min_element(values.begin(), values.end());
  b.max = *std::max_element(values.begin(), values.end());
  b.q1 = percentile(values, 25.0);
  b.median = percentile(values, 50.0);
  b.q3 = percentile(values, 75.0);
  b.p90 = percentile(values, 90.0);
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  return b;
}

std::vector<double> travel_times(const RunMetrics& run, bool completed_only) {
  std::vector<double> out;
  for (const auto& v : run.vehicles)
    if (v.completed || !completed_only) out.push_back(v.travel_time);
  return out;
}

std::vector<double> co2_values(const RunMetrics& run) {
  std::vector<double> out;
  for (const auto& v : run.vehicles)
    if (v.completed) out.push_back(v.co2_kg);
  return out;
}

std::map<int, double> message_histogram(const RunMetrics& run) {
  std::map<int, double> h;
  std::size_t n = 0;
  for (const auto& v : run.vehicles) {
    if (v.messages <= 0) continue;
    h[v.messages] += 1.0;
    ++n;
  }
  if (n == 0) throw MetricsError("run has no completed negotiations");
  for (auto& [k, p] : h) p /= static_cast<double>(n);
  return h;
}

double share_at_most(const std::map<int, double>& histogram, int messages) {
  double s = 0.0;
  for (const auto& [k, p] : histogram)
    if (k <= messages) s += p;
  return s;
}

CapacityResult capacity_sweep(const std::vector<double>& grid, double threshold,
                              const std::function<RunMetrics(double)>& run_at, bool parallel) {
  if (grid.empty()) throw MetricsError("empty density grid");
  if (!std::is_sorted(grid.begin(), grid.end())) throw MetricsError("density grid must be ascending");
  CapacityResult out;
  out.threshold = threshold;
  std::vector<RunMetrics> runs(grid.size());
  if (parallel) {
    std::vector<std::future<RunMetrics>> jobs;
    for (double d : grid) jobs.push_back(std::async(std::launch::async, run_at, d));
    for (std::size_t i = 0; i < jobs.size(); ++i) runs[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) runs[i] = run_at(grid[i]);
  }
  bool failed = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CapacityPoint p;
    p.density = grid[i];
    const auto tt = travel_times(runs[i], false);
    p.p90 = tt.empty() ? 0.0 : percentile(tt, 90.0);
    p.sustainable = p.p90 < threshold;
    if (p.sustainable) {
      if (failed) out.monotone = false;
      out.capacity = p.density;
    } else {
      failed = true;
    }
    out.points.push_back(p);
  }
  return out;
}

std::string vehicles_csv(const RunMetrics& run) {
  std::ostringstream os;
  os.precision(10);
  os << "id,entry_road,exit_road,depart,arrive,travel_time,co2_kg,stops,min_speed,messages,"
        "negotiated,backup,completed\n";
  for (const auto& v : run.vehicles) {
    os << v.id << ',' << v.entry_road << ',' << v.exit_road << ',' << v.depart << ',' << v.arrive << ','
       << v.travel_time << ',' << v.co2_kg << ',' << v.stops << ',' << v.min_speed << ',' << v.messages
       << ',' << v.negotiated << ',' << v.backup << ',' << v.completed << '\n';
  }
  return os.str();
}

std::string box_stats_csv(const std::vector<std::pair<std::string, BoxStats>>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "label,count,min,q1,median,q3,max,p90,mean\n";
  for (const auto& [label, b] : rows) {
    os << label << ',' << b.count << ',' << b.min << ',' << b.q1 << ',' << b.median << ',' << b.q3 << ','
       << b.max << ',' << b.p90 << ',' << b.mean << '\n';
  }
  return os.str();
}

namespace {

nlohmann::ordered_json box_json(const BoxStats& b) {
  return {{"count", b.count}, {"min", b.min}, {"q1", b.q1},   {"median", b.median},
          {"q3", b.q3},       {"max", b.max}, {"p90", b.p90}, {"mean", b.mean}};
}

}  // namespace

std::string summary_json(const RunMetrics& run, const std::string& label) {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["spawned"] = run.spawned;
  std::size_t done = 0;
  for (const auto& v : run.vehicles) done += v.completed;
  j["completed"] = done;
  j["travel_time"] = box_json(box_stats(travel_times(run, true)));
  j["travel_time_incl_unfinished"] = box_json(box_stats(travel_times(run, false)));
  j["co2_kg"] = box_json(box_stats(co2_values(run)));
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  bool any = false;
  for (const auto& v : run.vehicles) any = any || v.messages > 0;
  if (any)
    for (const auto& [k, p] : message_histogram(run)) hist[std::to_string(k)] = p;
  j["messages"] = hist;
  nlohmann::ordered_json backups = nlohmann::ordered_json::array();
  for (const auto& b : run.backups)
    backups.push_back({{"t_start", b.t_start}, {"t_end", b.t_end}, {"cav", b.cav}, {"cause", b.cause}});
  j["backups"] = backups;
  j["safety"] = {{"co_occupancy", run.safety.co_occupancy},
                 {"table_violations", run.safety.table_violations},
                 {"teleports", run.safety.teleports},
                 {"rear_end", run.safety.rear_end},
                 {"max_tracking_error", run.safety.max_tracking_error},
                 {"protocol_violations", run.safety.protocol_violations}};
  return j.dump(2) + "\n";
}

}  // namespace moveover
