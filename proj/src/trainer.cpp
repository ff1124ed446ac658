#include "smoothrl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "smoothrl/errors.hpp"

namespace smoothrl {

std::string to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::kBinary: return "binary";
    case RewardMode::kRandom: return "random";
    case RewardMode::kSmooth: return "smooth";
  }
  return "unknown";
}

RewardMode parse_reward_mode(const std::string& name) {
  if (name == "binary") return RewardMode::kBinary;
  if (name == "random") return RewardMode::kRandom;
  if (name == "smooth") return RewardMode::kSmooth;
  throw ContractViolation("unknown reward mode '" + name +
                          "' (expected binary, random or smooth)");
}

void RewardConfig::validate() const {
  if (!(lambda >= 0.0)) throw ContractViolation("lambda must be >= 0");
  if (mode == RewardMode::kRandom && !(noise_halfwidth > 0.0)) {
    throw ContractViolation("noise_halfwidth must be > 0 in random mode");
  }
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ContractViolation("group_size must be >= 2");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
    throw ContractViolation("clip_eps must lie in (0, 1)");
  }
  if (!(kl_beta >= 0.0)) throw ContractViolation("kl_beta must be >= 0");
  if (!(std_floor > 0.0)) throw ContractViolation("std_floor must be > 0");
  if (!(learning_rate > 0.0)) throw ContractViolation("learning_rate must be > 0");
  if (epochs_per_batch < 1 || batches < 0 || workers < 1) {
    throw ContractViolation("epochs_per_batch and workers must be >= 1");
  }
  if (groups_per_batch < 1) throw ContractViolation("groups_per_batch must be >= 1");
}

double hybrid_reward(const Rollout& rollout, const RewardConfig& cfg, Rng& rng) {
  const double success = rollout.success ? 1.0 : 0.0;
  switch (cfg.mode) {
    case RewardMode::kBinary:
      return success;
    case RewardMode::kRandom: {
      std::uniform_real_distribution<double> noise(-cfg.noise_halfwidth,
                                                   cfg.noise_halfwidth);
      return success + noise(rng);
    }
    case RewardMode::kSmooth:
      if (rollout.smoothness.horizon == 0) {
        throw TrajectoryTooShort("episode too short for a jerk-based reward");
      }
      return success * (1.0 - cfg.lambda * rollout.smoothness.mean_jerk_norm);
  }
  return success;
}

std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor) {
  const double n = static_cast<double>(rewards.size());
  std::vector<double> adv(rewards.size(), 0.0);
  if (rewards.empty()) return adv;
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd >= std_floor)) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - mean) / sd;
  }
  return adv;
}

double clipped_term(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

namespace {

struct StepDensity {
  int chunk = 0;  // index into the rollout's chunk list
  int offset = 0; // first action dimension of the step
  SliceDensity current;
  double old_logp = 0.0;
};

struct ChunkEval {
  ForwardCache cache;
  Eigen::VectorXd old_mean;
  Eigen::VectorXd d_mean;
  Eigen::VectorXd d_log_std;
};

}  // namespace

LossResult grpo_loss(const PolicyParams& params, const PolicyParams& old_params,
                     const ReferencePolicy& ref, const GroupBatch& batch,
                     const GrpoConfig& cfg) {
  const int g = static_cast<int>(batch.rollouts.size());
  if (g == 0 || static_cast<int>(batch.advantages.size()) != g) {
    throw ContractViolation("batch needs one advantage per rollout");
  }
  const int act_dim = params.shape.act_dim;
  LossResult out;
  out.grad = Eigen::VectorXd::Zero(params.num_params());
  std::vector<Eigen::VectorXd> query_obs;
  int clipped_steps = 0;
  double objective = 0.0;

  for (int i = 0; i < g; ++i) {
    const Rollout& r = batch.rollouts[i];
    const double adv = batch.advantages[i];
    const int dof = r.steps() > 0 ? static_cast<int>(r.actions.front().size()) : 0;

    std::vector<ChunkEval> chunks;
    std::vector<StepDensity> steps;
    for (int t = 0; t < r.steps(); ++t) {
      if (r.chunk_offset(t) == 0) {
        const Eigen::VectorXd x = r.observations[r.query_index(t)].to_vector();
        query_obs.push_back(x);
        chunks.push_back({forward(params, x), forward(old_params, x).mean,
                          Eigen::VectorXd::Zero(act_dim),
                          Eigen::VectorXd::Zero(act_dim)});
      }
      const int c = static_cast<int>(chunks.size()) - 1;
      const int first = r.chunk_offset(t) * dof;
      try {
        StepDensity s;
        s.chunk = c;
        s.offset = first;
        s.current = slice_density(params, chunks[c].cache.mean, r.actions[t], first);
        s.old_logp =
            slice_density(old_params, chunks[c].old_mean, r.actions[t], first).logp;
        steps.push_back(std::move(s));
      } catch (const BoundaryAction&) {
        ++out.excluded_steps;
      }
    }
    if (steps.empty()) continue;
    out.used_steps += static_cast<int>(steps.size());

    auto add_step_grad = [&](const StepDensity& s, double coef) {
      ChunkEval& ch = chunks[s.chunk];
      const auto n = s.current.d_mean.size();
      ch.d_mean.segment(s.offset, n) += coef * s.current.d_mean;
      ch.d_log_std.segment(s.offset, n) += coef * s.current.d_log_std;
    };

    if (cfg.ratio_mode == RatioMode::kPerStep) {
      const double w = 1.0 / (static_cast<double>(g) * steps.size());
      for (const StepDensity& s : steps) {
        const double ratio = std::exp(s.current.logp - s.old_logp);
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        objective += w * std::min(ratio * adv, clipped * adv);
        if (std::abs(ratio - 1.0) > cfg.clip_eps) ++clipped_steps;
        if (ratio * adv <= clipped * adv) add_step_grad(s, w * adv * ratio);
      }
    } else {
      double log_ratio = 0.0;
      for (const StepDensity& s : steps) log_ratio += s.current.logp - s.old_logp;
      const double ratio = std::exp(log_ratio);
      const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      const double w = 1.0 / g;
      objective += w * std::min(ratio * adv, clipped * adv);
      if (std::abs(ratio - 1.0) > cfg.clip_eps) clipped_steps += steps.size();
      if (ratio * adv <= clipped * adv) {
        for (const StepDensity& s : steps) add_step_grad(s, w * adv * ratio);
      }
    }
    // Objective gradient, negated into the loss gradient.
    for (const ChunkEval& ch : chunks) {
      backward(params, ch.cache, -ch.d_mean, -ch.d_log_std, out.grad);
    }
  }

  out.surrogate = objective;
  out.clip_frac = out.used_steps > 0
                      ? static_cast<double>(clipped_steps) / out.used_steps
                      : 0.0;
  if (!query_obs.empty()) {
    Eigen::VectorXd kl_grad;
    out.kl = kl_divergence_grad(params, ref, query_obs, kl_grad);
    if (cfg.kl_beta > 0.0) out.grad += cfg.kl_beta * kl_grad;
  }
  out.loss = -objective + cfg.kl_beta * out.kl;
  if (!std::isfinite(out.loss) || !out.grad.allFinite()) {
    throw NumericalFailure("non-finite GRPO loss or gradient");
  }
  return out;
}

LossResult grpo_loss(const PolicyParams& params, const PolicyParams& old_params,
                     const ReferencePolicy& ref, std::span<const GroupBatch> groups,
                     const GrpoConfig& cfg) {
  if (groups.empty()) throw ContractViolation("no groups");
  LossResult out = grpo_loss(params, old_params, ref, groups[0], cfg);
  for (std::size_t j = 1; j < groups.size(); ++j) {
    const LossResult r = grpo_loss(params, old_params, ref, groups[j], cfg);
    out.loss += r.loss;
    out.surrogate += r.surrogate;
    out.kl += r.kl;
    out.clip_frac += r.clip_frac;
    out.used_steps += r.used_steps;
    out.excluded_steps += r.excluded_steps;
    out.grad += r.grad;
  }
  const double inv = 1.0 / static_cast<double>(groups.size());
  out.loss *= inv;
  out.surrogate *= inv;
  out.kl *= inv;
  out.clip_frac *= inv;
  out.grad *= inv;
  return out;
}

Adam::Adam(int n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(n)),
      v_(Eigen::VectorXd::Zero(n)) {}

void Adam::step(Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  x.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

std::vector<DemoPair> demo_pairs(const Rollout& rollout) {
  std::vector<DemoPair> out;
  const int k = rollout.chunk_size;
  for (int t = 0; t < rollout.steps(); t += k) {
    const int n = std::min(k, rollout.steps() - t);
    const int dof = static_cast<int>(rollout.actions[t].size());
    DemoPair p;
    p.obs = rollout.observations[t].to_vector();
    p.action.resize(n * dof);
    for (int j = 0; j < n; ++j) p.action.segment(j * dof, dof) = rollout.actions[t + j];
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

// Adds -(1/n) grad logp of each demo in [begin, end) to grad; returns the
// matching loss contribution.
double bc_accumulate(const PolicyParams& params, const std::vector<DemoPair>& demos,
                     std::span<const int> idx, Eigen::VectorXd* grad) {
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  const int act_dim = params.shape.act_dim;
  double loss = 0.0;
  for (int i : idx) {
    const DemoPair& d = demos[i];
    const ForwardCache cache = forward(params, d.obs);
    const SliceDensity s = slice_density(params, cache.mean, d.action, 0);
    loss -= inv_n * s.logp;
    if (grad) {
      Eigen::VectorXd dm = Eigen::VectorXd::Zero(act_dim);
      Eigen::VectorXd ds = Eigen::VectorXd::Zero(act_dim);
      dm.head(d.action.size()) = -inv_n * s.d_mean;
      ds.head(d.action.size()) = -inv_n * s.d_log_std;
      backward(params, cache, dm, ds, *grad);
    }
  }
  return loss;
}

}  // namespace

double bc_loss(const PolicyParams& params, const std::vector<DemoPair>& demos) {
  if (demos.empty()) throw ContractViolation("no demonstrations");
  std::vector<int> idx(demos.size());
  std::iota(idx.begin(), idx.end(), 0);
  return bc_accumulate(params, demos, idx, nullptr);
}

BcResult bc_train(const std::vector<DemoPair>& demos, const PolicyShape& shape,
                  const BcConfig& cfg) {
  if (demos.empty()) throw ContractViolation("no demonstrations");
  PolicyShape s = shape;
  s.hidden = cfg.hidden;
  BcResult result{init_policy(s, cfg.seed, cfg.log_std_init), {}};
  PolicyParams& params = result.params;
  Adam adam(params.num_params(), cfg.learning_rate);
  Rng rng = derived_stream(cfg.seed, 0xBC);

  const int n = static_cast<int>(demos.size());
  const int batch = cfg.batch_size <= 0 ? n : std::min(cfg.batch_size, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  int cursor = n;
  Eigen::VectorXd grad(params.num_params());
  for (int it = 0; it < cfg.iterations; ++it) {
    if (cursor + batch > n) {
      if (batch < n) std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    grad.setZero();
    const double loss = bc_accumulate(
        params, demos, std::span<const int>(order.data() + cursor, batch), &grad);
    cursor += batch;
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw NumericalFailure("behavior cloning diverged at iteration " +
                             std::to_string(it));
    }
    result.loss_history.push_back(loss);
    Eigen::VectorXd flat = params.to_vector();
    adam.step(flat, grad);
    params.from_vector(flat);
    params.clamp_log_std();
  }
  return result;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng derived_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                   std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
  return Rng(seq);
}

std::int64_t batch_task_seed(std::uint64_t seed, int batch) {
  const std::uint64_t h = splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(batch));
  return static_cast<std::int64_t>(h >> 1);  // non-negative
}

std::int64_t demo_episode_seed(std::uint64_t seed, int episode) {
  const std::uint64_t h =
      splitmix64(splitmix64(seed ^ 0xDE30DE30ULL) ^ static_cast<std::uint64_t>(episode));
  return static_cast<std::int64_t>(h >> 1);
}

std::int64_t eval_episode_seed(std::uint64_t seed, int episode) {
  const std::uint64_t h =
      splitmix64(splitmix64(seed ^ 0xE7A1E7A1ULL) ^ static_cast<std::uint64_t>(episode));
  return -1 - static_cast<std::int64_t>(h >> 2);  // negative, disjoint from training
}

GroupBatch collect_group(const PolicyParams& snapshot, const EnvConfig& env_cfg,
                         const GrpoConfig& grpo_cfg,
                         const RewardConfig& reward_cfg, int group_index) {
  const int batch_index = group_index;
  GroupBatch batch;
  batch.task_seed = batch_task_seed(grpo_cfg.seed, batch_index);
  const int g = grpo_cfg.group_size;
  batch.rollouts.resize(g);
  auto run_member = [&](int i) {
    Rng rng = derived_stream(grpo_cfg.seed, batch_index, i, 1);
    batch.rollouts[i] = policy_episode(env_cfg, snapshot, batch.task_seed, &rng);
  };
  const int workers = std::min(grpo_cfg.workers, g);
  if (workers <= 1) {
    for (int i = 0; i < g; ++i) run_member(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < g; i += workers) run_member(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  batch.rewards.resize(g);
  for (int i = 0; i < g; ++i) {
    Rng rng = derived_stream(grpo_cfg.seed, batch_index, i, 2);
    batch.rewards[i] = hybrid_reward(batch.rollouts[i], reward_cfg, rng);
  }
  batch.advantages = group_advantages(batch.rewards, grpo_cfg.std_floor);
  return batch;
}

GrpoResult grpo_train(const PolicyParams& init, const ReferencePolicy& ref,
                      const EnvConfig& env_cfg, const GrpoConfig& grpo_cfg,
                      const RewardConfig& reward_cfg, const BatchCallback& on_batch) {
  env_cfg.validate();
  grpo_cfg.validate();
  reward_cfg.validate();
  GrpoResult result{init, {}};
  PolicyParams& params = result.params;
  Adam adam(params.num_params(), grpo_cfg.learning_rate);

  for (int b = 0; b < grpo_cfg.batches; ++b) {
    const auto t0 = std::chrono::steady_clock::now();
    const PolicyParams old = params;
    TrainLogRow row;
    row.batch = b;
    try {
      const int gpb = grpo_cfg.groups_per_batch;
      std::vector<GroupBatch> groups;
      for (int j = 0; j < gpb; ++j) {
        groups.push_back(collect_group(old, env_cfg, grpo_cfg, reward_cfg, b * gpb + j));
      }
      for (int e = 0; e < grpo_cfg.epochs_per_batch; ++e) {
        const LossResult loss = grpo_loss(params, old, ref, groups, grpo_cfg);
        if (e == 0) row.kl = loss.kl;
        row.clip_frac = loss.clip_frac;
        Eigen::VectorXd flat = params.to_vector();
        adam.step(flat, loss.grad);
        params.from_vector(flat);
        params.clamp_log_std();
        if (!params.all_finite()) throw NumericalFailure("non-finite parameters");
      }
      double reward = 0.0, success = 0.0, jerk = 0.0;
      for (const GroupBatch& batch : groups) {
        for (int i = 0; i < grpo_cfg.group_size; ++i) {
          reward += batch.rewards[i];
          success += batch.rollouts[i].success ? 1.0 : 0.0;
          jerk += batch.rollouts[i].smoothness.mean_jerk_norm;
        }
      }
      const double g = static_cast<double>(grpo_cfg.group_size) * gpb;
      row.mean_reward = reward / g;
      row.success_rate = success / g;
      row.mean_jerk = jerk / g;
    } catch (const NumericalFailure& e) {
      result.params = old;
      throw TrainingAborted(std::string(e.what()) + " at batch " + std::to_string(b),
                            std::move(result));
    }
    if (grpo_cfg.record_wall_time) {
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
    result.log.push_back(row);
    if (on_batch) on_batch(row);
  }
  return result;
}

EvalMetrics summarize(const std::vector<Rollout>& rollouts) {
  EvalMetrics m;
  m.episodes = static_cast<int>(rollouts.size());
  if (rollouts.empty()) return m;
  for (const Rollout& r : rollouts) {
    m.success_rate += r.success ? 1.0 : 0.0;
    m.mean_jerk += r.smoothness.mean_jerk_norm;
    m.peak_jerk += r.smoothness.peak_jerk_norm;
  }
  m.success_rate /= m.episodes;
  m.mean_jerk /= m.episodes;
  m.peak_jerk /= m.episodes;
  return m;
}

EvalMetrics evaluate_policy(const PolicyParams& params, const EnvConfig& env_cfg,
                            int episodes, std::uint64_t seed, bool stochastic) {
  std::vector<Rollout> rollouts;
  rollouts.reserve(episodes);
  for (int i = 0; i < episodes; ++i) {
    const std::int64_t ep = eval_episode_seed(seed, i);
    if (stochastic) {
      Rng rng = derived_stream(seed, 0xE7A1, i);
      rollouts.push_back(policy_episode(env_cfg, params, ep, &rng));
    } else {
      rollouts.push_back(policy_episode(env_cfg, params, ep, nullptr));
    }
  }
  return summarize(rollouts);
}

EvalMetrics evaluate_scripted(const EnvConfig& env_cfg, int episodes,
                              std::uint64_t seed, double duration, DemoPath path) {
  std::vector<Rollout> rollouts;
  rollouts.reserve(episodes);
  for (int i = 0; i < episodes; ++i) {
    rollouts.push_back(scripted_episode(env_cfg, eval_episode_seed(seed, i), duration, path));
  }
  return summarize(rollouts);
}

}  // namespace smoothrl
