#ifndef SMOOTHRL_CLI_CONFIG_HPP_
#define SMOOTHRL_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smoothrl/errors.hpp"
#include "smoothrl/sim_env.hpp"
#include "smoothrl/trainer.hpp"

namespace smoothrl::cli {

// Bad command line, config file or override. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// One flat experiment config. Every key of the JSON file maps to one field;
// see README for the key set.
struct ExperimentConfig {
  EnvConfig env;
  int demo_episodes = 10;
  double demo_duration = 2.4;
  DemoPath demo_path = DemoPath::kJoint;
  BcConfig bc;
  GrpoConfig grpo;
  RewardConfig reward;
  int eval_episodes = 200;
  bool eval_stochastic = false;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  ExperimentConfig();

  // Sets every seeded component (env, BC, GRPO) to `s`.
  void apply_seed(std::uint64_t s);
  PolicyShape policy_shape() const;
  // Throws ConfigError when any part is invalid.
  void validate() const;
};

// Canonical JSON text (sorted keys) of the resolved config.
std::string to_json_text(const ExperimentConfig& cfg);
// 16 hex digits of FNV-1a 64 over to_json_text.
std::string config_hash(const ExperimentConfig& cfg);

// Parses a flat JSON object on top of the defaults. Unknown keys, wrong
// types and invalid values raise ConfigError naming the key.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one key=value override; the value is parsed as JSON, with a bare
// word taken as a string.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// Default output root: $SMOOTHRL_OUTPUT_ROOT, else "smoothrl_runs".
std::filesystem::path output_root();
inline constexpr const char* kOutputRootEnv = "SMOOTHRL_OUTPUT_ROOT";

}  // namespace smoothrl::cli

#endif  // SMOOTHRL_CLI_CONFIG_HPP_
