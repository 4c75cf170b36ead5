// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lrwsde/sde.hpp"

namespace lrwsde {

// Malformed config or CLI usage; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string type;  // ou | poisson | gaussian-flow
  // ou
  Index d = 3;
  double temperature = 0.5;
  std::optional<Matrix> A;  // explicit parameters; sampled from param_seed
  std::optional<Vector> b;  // when absent
  std::uint64_t param_seed = 0;
  // poisson
  Index J = 5;
  double sigma1 = 10.0;
  // gaussian flow with schedule sigma0 * exp(-rate * t) on t in [0, 1]
  double sigma_data = 1.0;
  double sigma0 = 2.0;
  double rate = 2.0;
  double alpha_multiplier = 0.3;
};

// Resolved experiment configuration. Serialises losslessly to JSON; unknown
// keys in an input file are rejected.
struct ExperimentConfig {
  std::string experiment;  // ou-grid | ou-quant | poisson | converge | simulate
  std::vector<std::string> schemes;
  std::vector<double> dt_grid;
  std::string dx_rule = "rule_of_thumb";  // or "multipliers"
  std::vector<double> dx_multipliers;
  std::vector<std::string> precisions;  // empty = native double
  std::int64_t seeds = 1;
  std::uint64_t base_seed = 0;
  std::int64_t steps = 0;
  std::int64_t replicas = 0;  // converge only
  double burn_in = 0.0;
  std::string out;
  ModelConfig model;
  // simulate only
  std::string scheme = "lrw";
  double dt = 0.01;
  std::int64_t stride = 1;
  double dx_multiplier = 1.0;
  std::string precision;  // optional single format

  // Paper-protocol defaults for each subcommand.
  static ExperimentConfig defaults(std::string_view experiment);

  // Multiplies step, seed and replica counts by scale (minimum 1 each).
  void apply_scale(double scale);

  void validate() const;  // throws ConfigError

  nlohmann::json to_json() const;
  // Starts from defaults(experiment), overrides with the given object and
  // validates. Rejects unknown keys.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    std::string_view experiment);
};

}  // namespace lrwsde
