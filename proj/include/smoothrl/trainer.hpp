#ifndef SMOOTHRL_TRAINER_HPP_
#define SMOOTHRL_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothrl/policy.hpp"
#include "smoothrl/sim_env.hpp"

namespace smoothrl {

enum class RewardMode { kBinary, kRandom, kSmooth };

std::string to_string(RewardMode mode);
RewardMode parse_reward_mode(const std::string& name);

struct RewardConfig {
  RewardMode mode = RewardMode::kSmooth;
  double lambda = 0.2;
  double noise_halfwidth = 0.1;

  void validate() const;
};

// smooth: I * (1 - lambda * mean jerk); binary: I; random: I + U(-w, w).
// Negative values are possible in smooth mode and are not clamped.
double hybrid_reward(const Rollout& rollout, const RewardConfig& cfg, Rng& rng);

// (R - mean) / std with the population std; all zeros when std < std_floor.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor);

enum class RatioMode {
  kPerStep,     // one ratio per control step, trajectory advantage broadcast
  kTrajectory,  // product of the step ratios per rollout
};

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 0.01;
  double learning_rate = 3e-4;
  int epochs_per_batch = 4;
  int batches = 150;
  int groups_per_batch = 1;  // tasks per update, each normalized on its own
  double std_floor = 1e-8;
  std::uint64_t seed = 0;
  RatioMode ratio_mode = RatioMode::kPerStep;
  int workers = 1;
  bool record_wall_time = false;

  void validate() const;
};

struct GroupBatch {
  std::int64_t task_seed = 0;
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct LossResult {
  double loss = 0.0;
  double surrogate = 0.0;  // clipped objective before the KL term
  double kl = 0.0;
  double clip_frac = 0.0;
  int used_steps = 0;
  int excluded_steps = 0;  // boundary actions
  Eigen::VectorXd grad;    // d loss / d params
};

// Single clipped-surrogate term min(r A, clip(r, 1-eps, 1+eps) A).
double clipped_term(double ratio, double advantage, double eps);

// -mean_i mean_t min(r A_i, clip(r) A_i) + beta * KL on the batch's query
// observations, with its exact gradient.
LossResult grpo_loss(const PolicyParams& params, const PolicyParams& old_params,
                     const ReferencePolicy& ref, const GroupBatch& batch,
                     const GrpoConfig& cfg);

// Mean of grpo_loss over several groups.
LossResult grpo_loss(const PolicyParams& params, const PolicyParams& old_params,
                     const ReferencePolicy& ref, std::span<const GroupBatch> groups,
                     const GrpoConfig& cfg);

class Adam {
 public:
  Adam(int n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  // Descends along grad.
  void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad);
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Eigen::VectorXd m_, v_;
};

// One behavior-cloning sample: a query observation and the first
// action.size() dimensions of the chunk that followed it.
struct DemoPair {
  Eigen::VectorXd obs;
  Eigen::VectorXd action;
};

std::vector<DemoPair> demo_pairs(const Rollout& rollout);

struct BcConfig {
  double learning_rate = 1e-3;
  int iterations = 3000;
  int batch_size = 256;  // 0 means full batch
  std::uint64_t seed = 0;
  std::vector<int> hidden = {64, 64};
  double log_std_init = -0.5;
};

struct BcResult {
  PolicyParams params;
  std::vector<double> loss_history;  // minibatch negative mean logp
};

// Maximizes the mean demo log-density with Adam. Throws NumericalFailure on
// a non-finite loss.
BcResult bc_train(const std::vector<DemoPair>& demos, const PolicyShape& shape,
                  const BcConfig& cfg);

// Negative mean log-density over all demos.
double bc_loss(const PolicyParams& params, const std::vector<DemoPair>& demos);

struct TrainLogRow {
  int batch = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double mean_jerk = 0.0;
  double kl = 0.0;
  double clip_frac = 0.0;
  double wall_ms = 0.0;
};

struct GrpoResult {
  PolicyParams params;
  std::vector<TrainLogRow> log;
};

// Thrown when the update produces non-finite values. Carries the last
// finite parameters and the log so far.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, GrpoResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const GrpoResult& partial() const { return partial_; }

 private:
  GrpoResult partial_;
};

// Deterministic per-(seed, batch, member, salt) random stream.
Rng derived_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                   std::uint64_t c = 0);

// Task seed used for a training batch.
std::int64_t batch_task_seed(std::uint64_t seed, int batch);

// Collects one group of rollouts with the given snapshot, in member order,
// and fills rewards and advantages. group_index is
// batch * groups_per_batch + j and selects the task seed and noise streams.
GroupBatch collect_group(const PolicyParams& snapshot, const EnvConfig& env_cfg,
                         const GrpoConfig& grpo_cfg,
                         const RewardConfig& reward_cfg, int group_index);

using BatchCallback = std::function<void(const TrainLogRow&)>;

GrpoResult grpo_train(const PolicyParams& init, const ReferencePolicy& ref,
                      const EnvConfig& env_cfg, const GrpoConfig& grpo_cfg,
                      const RewardConfig& reward_cfg,
                      const BatchCallback& on_batch = {});

struct EvalMetrics {
  int episodes = 0;
  double success_rate = 0.0;
  double mean_jerk = 0.0;
  double peak_jerk = 0.0;
};

// Episode seed of the i-th scripted demonstration (non-negative).
std::int64_t demo_episode_seed(std::uint64_t seed, int episode);

// Evaluation episodes use seeds disjoint from the training task seeds.
std::int64_t eval_episode_seed(std::uint64_t seed, int episode);

// Mean-action episodes when stochastic is false, sampled episodes otherwise.
EvalMetrics evaluate_policy(const PolicyParams& params, const EnvConfig& env_cfg,
                            int episodes, std::uint64_t seed,
                            bool stochastic = false);

EvalMetrics evaluate_scripted(const EnvConfig& env_cfg, int episodes,
                              std::uint64_t seed, double duration = 2.4,
                              DemoPath path = DemoPath::kJoint);

EvalMetrics summarize(const std::vector<Rollout>& rollouts);

}  // namespace smoothrl

#endif  // SMOOTHRL_TRAINER_HPP_
