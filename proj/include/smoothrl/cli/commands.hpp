#ifndef SMOOTHRL_CLI_COMMANDS_HPP_
#define SMOOTHRL_CLI_COMMANDS_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "smoothrl/cli/config.hpp"
#include "smoothrl/smoothness.hpp"
#include "smoothrl/trainer.hpp"

namespace smoothrl::cli {

namespace fs = std::filesystem;

// Shared by every command: the resolved config, where it came from, and the
// streams for progress messages and warnings.
struct Context {
  ExperimentConfig cfg;
  std::string config_path;  // empty when only defaults and overrides apply
  std::ostream* out;
  std::ostream* err;
};

// Manifest written next to a command's artifacts.
struct ExperimentManifest {
  std::string config_path;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> layout;  // artifact role -> relative path
};
void write_manifest(const fs::path& path, const ExperimentManifest& m,
                    const ExperimentConfig& cfg);

// Scripted demonstrations as JSON lines (plus an optional per-step CSV).
// Returns the success rate and mean jerk it prints.
EvalMetrics cmd_demonstrate(const Context& ctx, int n_episodes, const fs::path& out_path,
                            const std::optional<fs::path>& steps_csv = std::nullopt);

enum class Stage { kBc, kGrpo };

struct TrainArtifacts {
  fs::path checkpoint;
  fs::path log;
  fs::path manifest;
};

// bc: demos come from `demos` or are generated from the config.
// grpo: starts from and anchors to `init` (default out_dir/bc.ckpt.json).
// A numeric failure writes the last finite checkpoint and the log, then
// throws NumericalFailure.
TrainArtifacts cmd_train(const Context& ctx, Stage stage, const fs::path& out_dir,
                         const std::optional<fs::path>& demos = std::nullopt,
                         const std::optional<fs::path>& init = std::nullopt);

// Mean-action episodes (sampled when the config says eval_stochastic), or the
// scripted controller when `checkpoint` is empty. Writes a metrics CSV when
// out_path is given.
EvalMetrics cmd_eval(const Context& ctx, const std::optional<fs::path>& checkpoint,
                     int n_episodes, std::uint64_t seed,
                     const std::optional<fs::path>& out_path = std::nullopt);

// Smoothness report per episode of a per-step CSV or JSON-lines file.
std::vector<SmoothnessReport> cmd_analyze(const Context& ctx, const fs::path& traj_file,
                                          const std::optional<fs::path>& out_path);

struct AblationRow {
  std::string mode;  // binary, random, smooth, or bc for the starting policy
  std::uint64_t seed = 0;
  EvalMetrics metrics;
};

struct AblationSummary {
  std::vector<AblationRow> bc;    // one per seed
  std::vector<AblationRow> rows;  // mode-major: binary, random, smooth
  std::map<std::string, EvalMetrics> means;  // per mode, bc included
};

// Per seed: demonstrate, BC, then GRPO with each reward mode, each
// evaluated on the same held-out episodes. Writes ablation.csv (per-seed
// rows then one mean row per mode), bc_summary.csv and a manifest.
AblationSummary cmd_ablate(const Context& ctx, const std::vector<std::uint64_t>& seeds,
                           const fs::path& out_dir);

}  // namespace smoothrl::cli

#endif  // SMOOTHRL_CLI_COMMANDS_HPP_
