#include "moveover/config.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

namespace moveover {

namespace {

using nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads the keys of one JSON object and remembers which were consumed.
class Section {
 public:
  Section(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string field(const std::string& key) const { return join(path_, key); }

  const ordered_json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void read(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    out = v.get<double>();
  }
  void read(const std::string& key, std::optional<double>& out) {
    if (!has(key)) return;
    if (raw(key).is_null()) {
      out.reset();
      return;
    }
    double d = 0.0;
    read(key, d);
    out = d;
  }
  void read(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    out = v.get<int>();
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    out = v.get<bool>();
  }
  void read(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    out = v.get<std::string>();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(field(k), "unknown key");
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_layout_params(Section s, LayoutParams& p) {
  s.read("approach_length", p.approach_length);
  s.read("exit_length", p.exit_length);
  s.read("lane_width", p.lane_width);
  s.read("hold_speed", p.hold_speed);
  s.read("v_max", p.v_max);
  s.read("v_max_turn", p.v_max_turn);
  s.read("braking_decel", p.braking_decel);
  s.read("zone_side", p.zone_side);
  s.read("zone_length", p.zone_length);
  s.read("zone_width", p.zone_width);
  s.read("square_side", p.square_side);
  s.read("ring_radius", p.ring_radius);
  s.read("left_turn_radius", p.left_turn_radius);
  s.finish();
}

void read_network(Section& parent, ScenarioConfig& c) {
  if (!parent.has("network")) return;
  const auto& v = parent.raw("network");
  if (v.is_string()) {
    try {
      c.network = DelayModel::from_label(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("network", e.what());
    }
    return;
  }
  Section s(v, "network");
  s.read("label", c.network.label);
  s.read("d_min_ms", c.network.d_min_ms);
  s.read("d_max_ms", c.network.d_max_ms);
  s.finish();
}

ScenarioConfig read_scenario(Section& root) {
  ScenarioConfig c;
  if (root.has("layout")) {
    std::string name;
    root.read("layout", name);
    try {
      c.layout = parse_layout_kind(name);
    } catch (const std::exception& e) {
      throw ConfigError("layout", e.what());
    }
  }
  if (root.has("layout_params")) read_layout_params(Section(root.raw("layout_params"), "layout_params"), c.layout_overrides);
  if (root.has("method")) {
    std::string name;
    root.read("method", name);
    try {
      c.method = parse_method(name);
    } catch (const std::exception& e) {
      throw ConfigError("method", e.what());
    }
  }
  read_network(root, c);
  root.read("negotiation_length", c.negotiation_length);
  root.read("rate", c.rate);
  root.read("duration", c.duration);
  root.read("timestep", c.timestep);
  root.read("seed", c.seed);
  root.read("yield_gap", c.yield_gap);
  root.read("event_log", c.event_log);
  if (root.has("vehicle")) {
    Section s(root.raw("vehicle"), "vehicle");
    s.read("a_max", c.vehicle.a_max);
    s.read("b_max", c.vehicle.b_max);
    s.read("v_min", c.vehicle.v_min);
    s.read("length", c.vehicle.length);
    s.read("width", c.vehicle.width);
    // Explicit speed limits override the layout's.
    if (s.has("v_max") || s.has("v_max_turn")) {
      c.vehicle_speeds_from_layout = false;
      const IntersectionLayout l = c.build();
      c.vehicle.v_max = l.v_max;
      c.vehicle.v_max_turn = l.v_max_turn;
    }
    s.read("v_max", c.vehicle.v_max);
    s.read("v_max_turn", c.vehicle.v_max_turn);
    s.finish();
  }
  if (root.has("controller")) {
    Section s(root.raw("controller"), "controller");
    s.read("safety_gap", c.controller.safety_gap);
    s.read("safe_margin", c.controller.safe_margin);
    s.read("widening", c.controller.widening);
    s.read("braking", c.controller.braking);
    s.read("gap_dt", c.controller.gap_dt);
    s.read("exchange_cap", c.controller.exchange_cap);
    s.read("revise_pad", c.controller.revise_pad);
    s.finish();
  }
  if (root.has("following")) {
    Section s(root.raw("following"), "following");
    s.read("a_max", c.following.a_max);
    s.read("comfort_decel", c.following.comfort_decel);
    s.read("emergency_decel", c.following.emergency_decel);
    s.read("min_gap", c.following.min_gap);
    s.read("reaction", c.following.reaction);
    s.finish();
  }
  if (root.has("traffic_light")) {
    const auto& v = root.raw("traffic_light");
    if (!v.is_null()) {
      TrafficLightTiming t = default_traffic_light(c.layout);
      Section s(v, "traffic_light");
      s.read("green", t.green);
      s.read("yellow", t.yellow);
      s.read("left_extension", t.left_extension);
      s.finish();
      c.traffic_light = t;
    }
  }
  if (root.has("emission")) {
    Section s(root.raw("emission"), "emission");
    s.read("c0", c.emission.c0);
    s.read("c1", c.emission.c1);
    s.read("c2", c.emission.c2);
    s.read("c3", c.emission.c3);
    s.read("c4", c.emission.c4);
    s.read("c5", c.emission.c5);
    s.finish();
  }
  return c;
}

SweepSettings read_sweep(Section s) {
  SweepSettings w;
  if (s.has("densities")) {
    const auto& v = s.raw("densities");
    if (!v.is_array()) throw ConfigError("sweep.densities", "expected an array of numbers");
    w.densities.clear();
    for (const auto& d : v) {
      if (!d.is_number()) throw ConfigError("sweep.densities", "expected an array of numbers");
      w.densities.push_back(d.get<double>());
    }
  }
  if (s.has("seeds")) {
    const auto& v = s.raw("seeds");
    if (!v.is_array()) throw ConfigError("sweep.seeds", "expected an array of integers");
    w.seeds.clear();
    for (const auto& d : v) {
      if (!d.is_number_unsigned()) throw ConfigError("sweep.seeds", "expected an array of integers");
      w.seeds.push_back(d.get<std::uint64_t>());
    }
  }
  s.read("reference_rate", w.reference_rate);
  s.read("threshold_factor", w.threshold_factor);
  s.finish();
  return w;
}

}  // namespace

void ExperimentConfig::validate() const {
  scenario.validate();
  if (!std::is_sorted(sweep.densities.begin(), sweep.densities.end()))
    throw ConfigError("sweep.densities", "must be ascending");
  for (double d : sweep.densities)
    if (!(d >= 0.0)) throw ConfigError("sweep.densities", "must be >= 0");
  if (sweep.seeds.empty()) throw ConfigError("sweep.seeds", "must not be empty");
  if (!(sweep.reference_rate > 0.0)) throw ConfigError("sweep.reference_rate", "must be > 0");
  if (!(sweep.threshold_factor > 0.0)) throw ConfigError("sweep.threshold_factor", "must be > 0");
}

ExperimentConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  Section root(j, "");
  ExperimentConfig c;
  c.scenario = read_scenario(root);
  if (root.has("sweep")) c.sweep = read_sweep(Section(root.raw("sweep"), "sweep"));
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& config) {
  const ScenarioConfig& c = config.scenario;
  ordered_json j;
  j["layout"] = std::string(to_string(c.layout));
  ordered_json lp = ordered_json::object();
  auto put = [&lp](const char* key, const std::optional<double>& v) {
    if (v) lp[key] = *v;
  };
  const LayoutParams& p = c.layout_overrides;
  put("approach_length", p.approach_length);
  put("exit_length", p.exit_length);
  put("lane_width", p.lane_width);
  put("hold_speed", p.hold_speed);
  put("v_max", p.v_max);
  put("v_max_turn", p.v_max_turn);
  put("braking_decel", p.braking_decel);
  put("zone_side", p.zone_side);
  put("zone_length", p.zone_length);
  put("zone_width", p.zone_width);
  put("square_side", p.square_side);
  put("ring_radius", p.ring_radius);
  put("left_turn_radius", p.left_turn_radius);
  if (!lp.empty()) j["layout_params"] = lp;
  j["method"] = to_string(c.method);
  j["network"] = {{"label", c.network.label}, {"d_min_ms", c.network.d_min_ms}, {"d_max_ms", c.network.d_max_ms}};
  if (c.negotiation_length) j["negotiation_length"] = *c.negotiation_length;
  j["rate"] = c.rate;
  j["duration"] = c.duration;
  j["timestep"] = c.timestep;
  j["seed"] = c.seed;
  j["yield_gap"] = c.yield_gap;
  j["event_log"] = c.event_log;
  ordered_json v = {{"a_max", c.vehicle.a_max},
                    {"b_max", c.vehicle.b_max},
                    {"v_min", c.vehicle.v_min},
                    {"length", c.vehicle.length},
                    {"width", c.vehicle.width}};
  if (!c.vehicle_speeds_from_layout) {
    v["v_max"] = c.vehicle.v_max;
    v["v_max_turn"] = c.vehicle.v_max_turn;
  }
  j["vehicle"] = v;
  j["controller"] = {{"safety_gap", c.controller.safety_gap}, {"safe_margin", c.controller.safe_margin},
                     {"widening", c.controller.widening},     {"braking", c.controller.braking},
                     {"gap_dt", c.controller.gap_dt},         {"exchange_cap", c.controller.exchange_cap},
                     {"revise_pad", c.controller.revise_pad}};
  j["following"] = {{"a_max", c.following.a_max},
                    {"comfort_decel", c.following.comfort_decel},
                    {"emergency_decel", c.following.emergency_decel},
                    {"min_gap", c.following.min_gap},
                    {"reaction", c.following.reaction}};
  if (c.traffic_light)
    j["traffic_light"] = {{"green", c.traffic_light->green},
                          {"yellow", c.traffic_light->yellow},
                          {"left_extension", c.traffic_light->left_extension}};
  j["emission"] = {{"c0", c.emission.c0}, {"c1", c.emission.c1}, {"c2", c.emission.c2},
                   {"c3", c.emission.c3}, {"c4", c.emission.c4}, {"c5", c.emission.c5}};
  j["sweep"] = {{"densities", config.sweep.densities},
                {"seeds", config.sweep.seeds},
                {"reference_rate", config.sweep.reference_rate},
                {"threshold_factor", config.sweep.threshold_factor}};
  return j.dump(2) + "\n";
}

}  // namespace moveover
