#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moveover/simulator.hpp"

namespace moveover {

struct SweepSettings {
  std::vector<double> densities;  // per incoming road, ascending
  std::vector<std::uint64_t> seeds{1};
  double reference_rate = 0.05;  // low-density priority run that sets the threshold
  double threshold_factor = 3.0;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  SweepSettings sweep;

  void validate() const;
};

// JSON document with the sections of ExperimentConfig. Unknown keys and type
// mismatches raise ConfigError naming the dotted field path; the result is
// validated.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& config);

}  // namespace moveover
