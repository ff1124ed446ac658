#ifndef SMOOTHRL_SIM_ENV_HPP_
#define SMOOTHRL_SIM_ENV_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smoothrl/kinematics.hpp"
#include "smoothrl/policy.hpp"
#include "smoothrl/smoothness.hpp"

namespace smoothrl {

// Goals are drawn uniformly by area from the annular sector
// inner <= |g| <= outer, angle_min <= atan2(g) <= angle_max.
struct GoalRegion {
  double inner = 0.45;
  double outer = 0.85;
  double angle_min = 0.2;
  double angle_max = 1.4;
};

struct EnvConfig {
  ManipulatorModel model = default_model();
  double dt = 0.2;
  int horizon = 20;
  double success_radius = 0.05;
  int hold_steps = 3;
  int chunk_size = 2;
  GoalRegion goal_region;
  double action_scale = 0.2;
  std::uint64_t seed = 0;
  // Rewards are trajectory level and undiscounted; kept for the record.
  double gamma = 1.0;
  bool randomize_start = false;
  // How rollout jerk is computed.
  JacobianDerivativeMode jacobian_mode = JacobianDerivativeMode::kAnalytic;

  static ManipulatorModel default_model();
  // Throws ContractViolation on a broken invariant.
  void validate() const;
  int dof() const { return model.dof(); }
  int obs_dim() const { return model.dof() + 3; }
  int act_dim() const { return model.dof() * chunk_size; }
};

struct Observation {
  VecX q;
  Vec2 goal = Vec2::Zero();
  double step_frac = 0.0;

  // [q, goal_x, goal_y, step_frac]
  VecX to_vector() const;
};

struct Rollout {
  std::int64_t episode_seed = 0;
  int chunk_size = 1;
  Vec2 goal = Vec2::Zero();
  // observations[t] is the state before action t. The policy conditions
  // step t on observations[(t / chunk_size) * chunk_size].
  std::vector<Observation> observations;
  std::vector<VecX> actions;
  std::vector<double> behavior_logps;
  // Latched success flag at every trajectory sample.
  std::vector<bool> success_trace;
  bool success = false;
  JointTrajectory joint_traj{1.0, {VecX::Zero(1), VecX::Zero(1)}};
  SmoothnessReport smoothness;

  int steps() const { return static_cast<int>(actions.size()); }
  int query_index(int step) const { return (step / chunk_size) * chunk_size; }
  int chunk_offset(int step) const { return step % chunk_size; }
};

struct StepResult {
  Observation observation;
  bool done = false;
  int applied = 0;  // deltas executed, fewer than given when the horizon hits
};

// Single-owner planar reach-and-hold episode.
class ReachEnv {
 public:
  explicit ReachEnv(EnvConfig config);

  const EnvConfig& config() const { return config_; }

  Observation reset(std::int64_t episode_seed);

  // Applies the deltas one control step at a time. Each delta is clipped to
  // +-action_scale and the result to the joint limits. step_logps, when
  // given, holds one behavior log-density per delta.
  StepResult step_chunk(std::span<const VecX> actions,
                        std::span<const double> step_logps = {});

  Rollout finalize() const;

  bool done() const { return step_ >= config_.horizon; }
  bool success() const { return success_; }
  int step() const { return step_; }
  const VecX& q() const { return q_; }
  const Vec2& goal() const { return goal_; }
  Observation observe() const;

 private:
  EnvConfig config_;
  bool started_ = false;
  std::int64_t episode_seed_ = 0;
  VecX q_;
  Vec2 goal_ = Vec2::Zero();
  int step_ = 0;
  int in_radius_ = 0;
  bool success_ = false;
  std::vector<Observation> observations_;
  std::vector<VecX> actions_;
  std::vector<double> logps_;
  std::vector<VecX> q_samples_;
  std::vector<bool> success_trace_;
};

// Goal sample for (config.seed, episode_seed); what reset() uses.
Vec2 sample_goal(const EnvConfig& config, std::int64_t episode_seed);

// Elbow-positive closed-form IK for 2-link arms. Empty when the point is out
// of reach or the solution leaves the joint limits.
std::optional<VecX> two_link_ik(const ManipulatorModel& model, const Vec2& p);

enum class DemoPath {
  kJoint,      // per-joint quintic between the start and the IK solution
  kCartesian,  // quintic straight line of the end effector, IK per sample
};

// Scripted demonstrator: min-jerk motion from the current configuration to
// the goal over `duration` seconds (stretched when a step would exceed
// 0.8 * action_scale), then hold.
class ScriptedController {
 public:
  ScriptedController(const EnvConfig& config, double duration = 2.4,
                     DemoPath path = DemoPath::kJoint);

  // Plans from the environment's current state; call right after reset().
  void plan(const ReachEnv& env);
  // Next chunk of deltas for the environment's current step.
  std::vector<VecX> next_chunk(const ReachEnv& env) const;

 private:
  std::vector<VecX> cartesian_path(const VecX& start, long steps) const;

  EnvConfig config_;
  double duration_;
  DemoPath mode_;
  Vec2 goal_ = Vec2::Zero();
  std::vector<VecX> path_;  // joint positions per control step
};

// Runs the scripted controller for one episode.
Rollout scripted_episode(const EnvConfig& config, std::int64_t episode_seed,
                         double duration = 2.4, DemoPath path = DemoPath::kJoint);

// Sampled policy episode, or with rng == nullptr the mean action is executed
// and behavior_logps are left at zero.
Rollout policy_episode(const EnvConfig& config, const PolicyParams& params,
                       std::int64_t episode_seed, Rng* rng);

}  // namespace smoothrl

#endif  // SMOOTHRL_SIM_ENV_HPP_
