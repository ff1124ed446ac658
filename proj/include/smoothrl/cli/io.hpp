#ifndef SMOOTHRL_CLI_IO_HPP_
#define SMOOTHRL_CLI_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "smoothrl/errors.hpp"
#include "smoothrl/policy.hpp"
#include "smoothrl/sim_env.hpp"
#include "smoothrl/smoothness.hpp"
#include "smoothrl/trainer.hpp"

namespace smoothrl::cli {

inline constexpr int kFormatVersion = 1;

// File kinds. CSV files start with "# smoothrl.<kind> version=1
// config_hash=<hex>" plus kind-specific key=value fields; JSON-lines files
// start with a header object carrying the same fields.
inline constexpr const char* kRolloutsKind = "rollouts";
inline constexpr const char* kStepsKind = "steps";
inline constexpr const char* kCheckpointKind = "checkpoint";
inline constexpr const char* kTrainLogKind = "train_log";
inline constexpr const char* kBcLogKind = "bc_log";
inline constexpr const char* kSmoothnessKind = "smoothness";
inline constexpr const char* kMetricsKind = "metrics";
inline constexpr const char* kAblationKind = "ablation";

// Opens for writing, creating parent directories. Throws ConfigError when
// the path cannot be written.
std::ofstream open_output(const std::filesystem::path& path);

std::string csv_header_line(const std::string& kind, const std::string& hash,
                            const std::string& extra = "");

// Rollouts as JSON lines: a header line, then one record per episode with
// dt, horizon, goal, success, q samples, actions, behavior_logps,
// success_trace and the smoothness report.
void write_rollouts_jsonl(const std::filesystem::path& path,
                          const std::vector<Rollout>& rollouts,
                          const EnvConfig& env, const std::string& hash);

struct RolloutFile {
  std::string config_hash;
  double dt = 0.0;
  std::vector<Rollout> rollouts;
};

// Rebuilds observations from the stored samples. Throws FormatError naming
// the line on malformed input.
RolloutFile read_rollouts_jsonl(const std::filesystem::path& path,
                                const ManipulatorModel& model);

// Per-step CSV: columns t, q1..q_dof, a1..a_dof, ee_x, ee_y,
// success_latched, one row per trajectory sample. t is the step index and
// restarts at 0 for each episode; a_i on a row is the delta applied after
// it, zero on an episode's last row.
void write_steps_csv(const std::filesystem::path& path,
                     const std::vector<Rollout>& rollouts,
                     const ManipulatorModel& model, double dt,
                     const std::string& hash);

// Joint trajectories from a per-step CSV; throws FormatError naming the
// line, ContractViolation on a dof mismatch with `model`.
std::vector<JointTrajectory> read_steps_csv(const std::filesystem::path& path,
                                            const ManipulatorModel& model);

// Either format, told apart by the first line.
std::vector<JointTrajectory> read_trajectories(const std::filesystem::path& path,
                                               const ManipulatorModel& model);

// Checkpoint: {"format","version","config_hash","policy":{shape},
// "tensors":[{"name","shape","values"}]}, values row-major.
void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const std::string& hash);

struct Checkpoint {
  std::string config_hash;
  PolicyParams params;
};

class CheckpointMismatch : public FormatError {
 public:
  explicit CheckpointMismatch(const std::string& what) : FormatError(what) {}
};

// Throws CheckpointMismatch when the version or any tensor shape disagrees
// with `expected`, FormatError on malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const PolicyShape& expected);

void write_train_log(const std::filesystem::path& path,
                     const std::vector<TrainLogRow>& rows, const std::string& hash);
void write_bc_log(const std::filesystem::path& path,
                  const std::vector<double>& losses, const std::string& hash);

void write_smoothness_csv(const std::filesystem::path& path,
                          const std::vector<SmoothnessReport>& reports,
                          const std::string& hash);

// Numbers are written with 17 significant digits so reading them back is
// exact.
std::string format_double(double v);

}  // namespace smoothrl::cli

#endif  // SMOOTHRL_CLI_IO_HPP_
