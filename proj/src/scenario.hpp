#pragma once

#include <string>
#include <vector>

#include "training.hpp"

namespace declink {

enum class PolicyChoice { Cdnn, LocallyRobust, Naive, PerfectCsi, Tdma, AlwaysOn };

const char* policy_name(PolicyChoice p);
PolicyChoice policy_from_name(const std::string& name);

// One CSI noise template entry: either a constant or a multiple of the sweep
// parameter sigma.
struct SigmaEntry {
  bool is_sigma = false;
  double value = 0.0;  // the constant, or the sigma coefficient

  double resolve(double sigma) const { return is_sigma ? value * sigma : value; }
};

// Experiment definition: channel statistics, the per-TX CSI noise templates,
// evaluation size, training hyperparameters, and which policies to compare.
struct ScenarioConfig {
  std::string name;
  int k_users = 0;
  double p_max = 1.0;
  double noise_power = 1.0;
  GainVarianceSpec gain_variance;
  std::vector<std::vector<SigmaEntry>> csi_template;  // per TX, K*K row-major
  bool shared_estimate = false;
  int n_eval = 50000;
  std::vector<PolicyChoice> policies;
  TrainConfig train;

  void validate() const;
};

// Parse + validate the documented JSON schema. Unknown keys are rejected
// with the offending field path.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario_json(const std::string& text, const std::string& origin);
std::string scenario_to_json(const ScenarioConfig& config);

// Bundled experiment presets.
std::vector<std::string> preset_names();
ScenarioConfig preset_scenario(const std::string& name);

// Resolve the per-TX sigma matrices at one sweep point.
CsiNoiseSpec instantiate_noise(const ScenarioConfig& config, double sigma);

// "a:b:step" -> {a, a+step, ..., b}; all values must lie in [0, 1].
std::vector<double> parse_sigma_grid(const std::string& spec);

}  // namespace declink
