#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "moveover/config.hpp"
#include "moveover/experiment.hpp"
#include "moveover/layout.hpp"
#include "moveover/metrics.hpp"
#include "moveover/queueing.hpp"
#include "moveover/simulator.hpp"

using namespace moveover;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<double> densities;
  std::vector<std::string> methods;
  std::vector<std::string> networks;
  std::optional<double> rate;
  std::vector<double> lambdas;
  std::vector<double> speeds_kmh;
  double decel = 4.5;
  std::vector<double> t_neg{0.03, 0.4};
};

// Writes `text` to out/name, or to stdout when no output directory is given.
void emit(const Options& o, const std::string& name, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(o.out) / name).string());
  f << text;
}

Method method_arg(const std::string& text) {
  try {
    return parse_method(text);
  } catch (const std::exception& e) {
    throw ConfigError("method", e.what());
  }
}

DelayModel network_arg(const std::string& text) {
  try {
    return DelayModel::from_label(text);
  } catch (const std::exception& e) {
    throw ConfigError("network", e.what());
  }
}

ExperimentConfig load(const Options& o) {
  ExperimentConfig c = load_config(o.config);
  if (o.seed) {
    c.scenario.seed = *o.seed;
    c.sweep.seeds = {*o.seed};
  }
  if (o.rate) c.scenario.rate = *o.rate;
  if (!o.densities.empty()) c.sweep.densities = o.densities;
  if (o.methods.size() == 1) c.scenario.method = method_arg(o.methods.front());
  if (o.networks.size() == 1) c.scenario.network = network_arg(o.networks.front());
  c.validate();
  return c;
}

int cmd_run(const Options& o) {
  const ExperimentConfig c = load(o);
  const RunOutput r = run(c.scenario);
  const std::string label = std::string(to_string(c.scenario.layout)) + "/" + to_string(c.scenario.method) +
                            "/" + c.scenario.network.label;
  if (o.out.empty()) {
    std::cout << summary_json(r.metrics, label);
    return kOk;
  }
  emit(o, "summary.json", summary_json(r.metrics, label));
  emit(o, "vehicles.csv", vehicles_csv(r.metrics));
  std::vector<std::pair<std::string, BoxStats>> rows{
      {"travel_time_s", box_stats(travel_times(r.metrics, true))},
      {"co2_kg", box_stats(co2_values(r.metrics))}};
  emit(o, "box_stats.csv", box_stats_csv(rows));
  if (c.scenario.event_log) emit(o, "events.csv", events_csv(r.events));
  return kOk;
}

int cmd_sweep(const Options& o) {
  const ExperimentConfig base = load(o);
  if (base.sweep.densities.empty()) throw ConfigError("sweep.densities", "empty density grid");
  // Each method is combined with each network; baselines do not negotiate and
  // run once with ideal communication.
  std::vector<Method> methods;
  for (const auto& m : o.methods) methods.push_back(method_arg(m));
  if (methods.empty()) methods.push_back(base.scenario.method);
  std::vector<DelayModel> nets;
  for (const auto& n : o.networks) nets.push_back(network_arg(n));
  if (nets.empty()) nets.push_back(base.scenario.network);

  const double threshold = capacity_threshold(base.scenario, base.sweep);
  std::ostringstream table, points;
  table << "layout,method,network,threshold,capacity,monotone\n";
  points << "layout,method,network,density,p90,sustainable\n";
  for (Method m : methods) {
    std::vector<DelayModel> these = nets;
    if (m != Method::Moveover) these = {DelayModel::ideal()};
    for (const auto& net : these) {
      ExperimentConfig c = base;
      c.scenario.method = m;
      c.scenario.network = net;
      c.validate();
      const CapacityResult r = sweep_capacity(c.scenario, c.sweep, threshold);
      const std::string key =
          std::string(to_string(c.scenario.layout)) + "," + to_string(m) + "," + net.label;
      table << key << ',' << threshold << ','
            << (r.capacity ? std::to_string(*r.capacity) : std::string("below grid minimum")) << ','
            << (r.monotone ? "true" : "false") << '\n';
      for (const auto& p : r.points)
        points << key << ',' << p.density << ',' << p.p90 << ',' << (p.sustainable ? "true" : "false") << '\n';
      if (!r.monotone)
        std::cerr << "warning: " << key << " is not monotone over the grid; add seeds\n";
    }
  }
  emit(o, "capacity.csv", table.str());
  if (!o.out.empty()) emit(o, "capacity_points.csv", points.str());
  return kOk;
}

int cmd_analyze_queue(const Options& o) {
  std::vector<double> lambdas = o.lambdas;
  if (lambdas.empty())
    for (int i = 1; i <= 80; ++i) lambdas.push_back(0.25 * i);
  emit(o, "queue.csv", queue_sweep_csv(standard_queue_cases(), lambdas));
  return kOk;
}

int cmd_zone_design(const Options& o) {
  std::vector<double> speeds = o.speeds_kmh;
  if (speeds.empty())
    for (int k = 10; k <= 70; ++k) speeds.push_back(k);
  std::ostringstream os;
  os.precision(10);
  os << "v_neg_kmh,v_neg,d_neg";
  for (double t : o.t_neg) os << ",l_neg_" << t;
  os << '\n';
  for (double kmh : speeds) {
    const double v = kmh / 3.6;
    os << kmh << ',' << v << ',' << min_negotiation_distance(v, o.decel);
    for (double t : o.t_neg) os << ',' << min_negotiation_length(v, t);
    os << '\n';
  }
  emit(o, "zone_design.csv", os.str());
  return kOk;
}

int cmd_validate(const Options& o) {
  const ExperimentConfig c = load(o);
  std::cout << "ok: " << to_string(c.scenario.layout) << ' ' << to_string(c.scenario.method) << ' '
            << c.scenario.network.label << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moveover intersection simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "seed override");
    sub->add_option("--method", o.methods, "priority, traffic_light, fifo or moveover")->delimiter(',');
    sub->add_option("--network", o.networks, "ideal, 5G or 4G")->delimiter(',');
  };
  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  add_config(run_cmd);
  run_cmd->add_option("--rate", o.rate, "arrivals per second per incoming road");
  run_cmd->add_option("--out", o.out, "output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "capacity sweep over a density grid");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--densities", o.densities, "comma-separated ascending grid")->delimiter(',');
  sweep_cmd->add_option("--out", o.out, "output directory");

  auto* queue_cmd = app.add_subcommand("analyze-queue", "controller queue analytics");
  queue_cmd->add_option("--lambdas", o.lambdas, "negotiation arrival rates, 1/s")->delimiter(',');
  queue_cmd->add_option("--out", o.out, "output directory");

  auto* zone_cmd = app.add_subcommand("zone-design", "negotiation distance and length curves");
  zone_cmd->add_option("--speeds", o.speeds_kmh, "hold speeds, km/h")->delimiter(',');
  zone_cmd->add_option("--decel", o.decel, "braking deceleration, m/s^2");
  zone_cmd->add_option("--t-neg", o.t_neg, "negotiation durations, s")->delimiter(',');
  zone_cmd->add_option("--out", o.out, "output directory");

  auto* validate_cmd = app.add_subcommand("validate-config", "check a config file");
  validate_cmd->add_option("--config", o.config, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*queue_cmd) return cmd_analyze_queue(o);
    if (*zone_cmd) return cmd_zone_design(o);
    if (*validate_cmd) return cmd_validate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}
