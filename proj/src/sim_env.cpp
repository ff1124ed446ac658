#include "smoothrl/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "smoothrl/errors.hpp"
#include "smoothrl/finite_difference.hpp"

namespace smoothrl {

ManipulatorModel EnvConfig::default_model() {
  return ManipulatorModel({0.5, 0.5}, {{-1.2, 1.6}, {0.2, 2.6}});
}

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw ContractViolation("dt must be positive");
  if (hold_steps < 1 || horizon < hold_steps) {
    throw ContractViolation("need horizon >= hold_steps >= 1");
  }
  if (!(success_radius > 0.0)) {
    throw ContractViolation("success_radius must be positive");
  }
  if (chunk_size < 1) throw ContractViolation("chunk_size must be >= 1");
  if (!(action_scale > 0.0)) {
    throw ContractViolation("action_scale must be positive");
  }
  const GoalRegion& g = goal_region;
  if (!(g.inner >= 0.0 && g.inner <= g.outer && g.outer <= model.reach())) {
    throw ContractViolation("goal annulus must satisfy 0 <= inner <= outer <= reach");
  }
  if (!(g.angle_min <= g.angle_max)) {
    throw ContractViolation("goal angle range is empty");
  }
}

VecX Observation::to_vector() const {
  VecX v(q.size() + 3);
  v << q, goal, step_frac;
  return v;
}

namespace {

Rng episode_stream(const EnvConfig& config, std::int64_t episode_seed) {
  const auto s = config.seed;
  const auto e = static_cast<std::uint64_t>(episode_seed);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32)};
  return Rng(seq);
}

}  // namespace

Vec2 sample_goal(const EnvConfig& config, std::int64_t episode_seed) {
  Rng rng = episode_stream(config, episode_seed);
  const GoalRegion& g = config.goal_region;
  std::uniform_real_distribution<double> area(g.inner * g.inner,
                                              g.outer * g.outer);
  std::uniform_real_distribution<double> angle(g.angle_min, g.angle_max);
  const double r = std::sqrt(area(rng));
  const double a = angle(rng);
  return Vec2(r * std::cos(a), r * std::sin(a));
}

ReachEnv::ReachEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
}

Observation ReachEnv::observe() const {
  return Observation{q_, goal_,
                     static_cast<double>(step_) / config_.horizon};
}

Observation ReachEnv::reset(std::int64_t episode_seed) {
  started_ = true;
  episode_seed_ = episode_seed;
  goal_ = sample_goal(config_, episode_seed);
  q_ = config_.model.home();
  if (config_.randomize_start) {
    // Separate stream so goals do not depend on the start flag.
    Rng rng = episode_stream(config_, ~episode_seed);
    for (int i = 0; i < config_.dof(); ++i) {
      const JointLimit& lim = config_.model.joint_limits()[i];
      std::uniform_real_distribution<double> u(lim.lower, lim.upper);
      q_[i] = u(rng);
    }
  }
  step_ = 0;
  in_radius_ = 0;
  success_ = false;
  observations_.clear();
  actions_.clear();
  logps_.clear();
  q_samples_.assign(1, q_);
  success_trace_.assign(1, false);
  return observe();
}

StepResult ReachEnv::step_chunk(std::span<const VecX> actions,
                                std::span<const double> step_logps) {
  if (!started_) throw ContractViolation("step before reset");
  if (done()) throw EpisodeFinished();
  if (!step_logps.empty() && step_logps.size() != actions.size()) {
    throw ContractViolation("one behavior log-density per action expected");
  }
  const double scale = config_.action_scale;
  StepResult result;
  for (std::size_t i = 0; i < actions.size() && !done(); ++i) {
    if (actions[i].size() != config_.dof()) {
      throw ContractViolation("action dimension does not match dof");
    }
    observations_.push_back(observe());
    const VecX delta = actions[i].cwiseMax(-scale).cwiseMin(scale);
    q_ = config_.model.clamp_to_limits(q_ + delta);
    actions_.push_back(delta);
    logps_.push_back(step_logps.empty() ? 0.0 : step_logps[i]);
    ++step_;
    ++result.applied;

    const Vec2 ee = forward_kinematics(config_.model, q_);
    in_radius_ = (ee - goal_).norm() <= config_.success_radius ? in_radius_ + 1 : 0;
    if (in_radius_ >= config_.hold_steps) success_ = true;
    q_samples_.push_back(q_);
    success_trace_.push_back(success_);
  }
  result.observation = observe();
  result.done = done();
  return result;
}

Rollout ReachEnv::finalize() const {
  if (!done()) throw ContractViolation("finalize before the episode is done");
  Rollout r;
  r.episode_seed = episode_seed_;
  r.chunk_size = config_.chunk_size;
  r.goal = goal_;
  r.observations = observations_;
  r.actions = actions_;
  r.behavior_logps = logps_;
  r.success_trace = success_trace_;
  r.success = success_;
  r.joint_traj = JointTrajectory(config_.dt, q_samples_);
  // Very short episodes carry no jerk estimate; the report keeps horizon 0.
  if (r.joint_traj.size() >= fd::min_samples(3)) {
    r.smoothness = trajectory_smoothness(config_.model, r.joint_traj,
                                         {config_.jacobian_mode});
  }
  return r;
}

std::optional<VecX> two_link_ik(const ManipulatorModel& model, const Vec2& p) {
  if (model.dof() != 2) throw ContractViolation("two_link_ik needs a 2-link arm");
  const double l1 = model.link_lengths()[0], l2 = model.link_lengths()[1];
  const double c2 = (p.squaredNorm() - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  if (c2 < -1.0 || c2 > 1.0) return std::nullopt;
  VecX q(2);
  q[1] = std::acos(c2);
  q[0] = std::atan2(p.y(), p.x()) -
         std::atan2(l2 * std::sin(q[1]), l1 + l2 * std::cos(q[1]));
  if (!model.within_limits(q)) return std::nullopt;
  return q;
}

ScriptedController::ScriptedController(const EnvConfig& config, double duration,
                                       DemoPath path)
    : config_(config), duration_(duration), mode_(path) {
  if (!(duration_ > 0.0)) throw ContractViolation("duration must be positive");
}

void ScriptedController::plan(const ReachEnv& env) {
  goal_ = env.goal();
  const auto target = two_link_ik(config_.model, env.goal());
  if (!target) throw InfeasibleDemonstration("goal has no IK solution within limits");
  const VecX start = env.q();
  const double travel = (*target - start).cwiseAbs().maxCoeff();
  // Peak of the quintic's derivative is 1.875.
  long steps = std::lround(duration_ / config_.dt);
  const double limit = 0.8 * config_.action_scale;
  steps = std::max<long>(steps, static_cast<long>(std::ceil(1.875 * travel / limit)));
  steps = std::max<long>(steps, 2);
  if (env.step() + steps + config_.hold_steps > config_.horizon) {
    throw InfeasibleDemonstration("motion does not fit in the horizon");
  }
  std::vector<VecX> motion;
  if (mode_ == DemoPath::kJoint) {
    motion = sample_min_jerk_joint_traj(config_.model, start, *target,
                                        steps * config_.dt, config_.dt)
                 .samples();
  } else {
    motion = cartesian_path(start, steps);
  }
  path_.assign(env.step(), start);
  path_.insert(path_.end(), motion.begin(), motion.end());
}

std::vector<VecX> ScriptedController::cartesian_path(const VecX& start,
                                                     long steps) const {
  const MinJerkSegment seg{forward_kinematics(config_.model, start),
                           Vec2::Zero(), 0.0};
  const double limit = 0.8 * config_.action_scale;
  // Lengthen until no joint moves faster than the action limit.
  for (;; ++steps) {
    if (steps + config_.hold_steps > config_.horizon) {
      throw InfeasibleDemonstration("Cartesian motion does not fit in the horizon");
    }
    MinJerkSegment s = seg;
    s.end = goal_;
    s.duration = steps * config_.dt;
    std::vector<VecX> out{start};
    bool fits = true;
    for (long i = 1; i <= steps && fits; ++i) {
      const auto q = two_link_ik(config_.model,
                                 min_jerk_position(s, std::min(i * config_.dt, s.duration)));
      if (!q) throw InfeasibleDemonstration("Cartesian path leaves the reachable set");
      fits = (*q - out.back()).cwiseAbs().maxCoeff() <= limit;
      out.push_back(*q);
    }
    if (fits) return out;
  }
}

std::vector<VecX> ScriptedController::next_chunk(const ReachEnv& env) const {
  std::vector<VecX> chunk;
  const int t0 = env.step();
  for (int t = t0; t < t0 + config_.chunk_size; ++t) {
    if (t + 1 < static_cast<int>(path_.size())) {
      chunk.push_back(path_[t + 1] - path_[t]);
    } else {
      chunk.push_back(VecX::Zero(config_.dof()));
    }
  }
  return chunk;
}

Rollout scripted_episode(const EnvConfig& config, std::int64_t episode_seed,
                         double duration, DemoPath path) {
  ReachEnv env(config);
  env.reset(episode_seed);
  ScriptedController ctrl(config, duration, path);
  ctrl.plan(env);
  while (!env.done()) {
    const auto chunk = ctrl.next_chunk(env);
    env.step_chunk(chunk);
  }
  return env.finalize();
}

Rollout policy_episode(const EnvConfig& config, const PolicyParams& params,
                       std::int64_t episode_seed, Rng* rng) {
  if (params.shape.obs_dim != config.obs_dim() ||
      params.shape.act_dim != config.act_dim()) {
    throw ContractViolation("policy shape does not match the environment");
  }
  ReachEnv env(config);
  Observation obs = env.reset(episode_seed);
  const int dof = config.dof();
  std::vector<VecX> chunk(config.chunk_size);
  std::vector<double> logps(config.chunk_size, 0.0);
  while (!env.done()) {
    const VecX x = obs.to_vector();
    VecX a;
    if (rng) {
      const ActionSample s = act(params, x, *rng);
      a = s.action;
      // Per-step marginal densities; their sum is s.logp.
      for (int j = 0; j < config.chunk_size; ++j) {
        logps[j] = s.dim_logp.segment(j * dof, dof).sum();
      }
    } else {
      a = mean_action(params, x);
    }
    for (int j = 0; j < config.chunk_size; ++j) chunk[j] = a.segment(j * dof, dof);
    obs = env.step_chunk(chunk, logps).observation;
  }
  return env.finalize();
}

}  // namespace smoothrl
