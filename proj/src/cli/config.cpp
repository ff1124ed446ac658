#include "smoothrl/cli/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace smoothrl::cli {

using nlohmann::json;

ExperimentConfig::ExperimentConfig() {
  grpo.groups_per_batch = 8;
  grpo.learning_rate = 1e-3;
  grpo.kl_beta = 0.05;
  grpo.batches = 300;
}

void ExperimentConfig::apply_seed(std::uint64_t s) {
  seed = s;
  env.seed = s;
  bc.seed = s;
  grpo.seed = s;
}

PolicyShape ExperimentConfig::policy_shape() const {
  return PolicyShape{env.obs_dim(), env.act_dim(), bc.hidden, env.action_scale};
}

void ExperimentConfig::validate() const {
  try {
    env.validate();
    grpo.validate();
    reward.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  if (demo_episodes < 0) throw ConfigError("demo_episodes must be >= 0");
  if (!(demo_duration > 0.0)) throw ConfigError("demo_duration must be > 0");
  if (!(bc.learning_rate > 0.0)) throw ConfigError("bc_learning_rate must be > 0");
  if (bc.iterations < 0) throw ConfigError("bc_iterations must be >= 0");
  if (bc.hidden.empty()) throw ConfigError("hidden must list at least one width");
  for (int w : bc.hidden) {
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  }
  if (!(bc.log_std_init >= kLogStdMin && bc.log_std_init <= kLogStdMax)) {
    throw ConfigError("bc_log_std_init outside the log_std clamp range");
  }
  if (eval_episodes < 0) throw ConfigError("eval_episodes must be >= 0");
  if (seeds.empty()) throw ConfigError("seeds must be a nonempty list");
}

namespace {

std::string ratio_mode_name(RatioMode m) {
  return m == RatioMode::kPerStep ? "per_step" : "trajectory";
}

json to_json(const ExperimentConfig& c) {
  const ManipulatorModel& m = c.env.model;
  std::vector<double> lower, upper;
  for (const JointLimit& l : m.joint_limits()) {
    lower.push_back(l.lower);
    upper.push_back(l.upper);
  }
  json j;
  j["link_lengths"] = m.link_lengths();
  j["joint_lower"] = lower;
  j["joint_upper"] = upper;
  j["dt"] = c.env.dt;
  j["horizon"] = c.env.horizon;
  j["success_radius"] = c.env.success_radius;
  j["hold_steps"] = c.env.hold_steps;
  j["chunk_size"] = c.env.chunk_size;
  j["goal_inner"] = c.env.goal_region.inner;
  j["goal_outer"] = c.env.goal_region.outer;
  j["goal_angle_min"] = c.env.goal_region.angle_min;
  j["goal_angle_max"] = c.env.goal_region.angle_max;
  j["action_scale"] = c.env.action_scale;
  j["gamma"] = c.env.gamma;
  j["randomize_start"] = c.env.randomize_start;
  j["jacobian_mode"] =
      c.env.jacobian_mode == JacobianDerivativeMode::kAnalytic ? "analytic" : "finite_difference";
  j["demo_path"] = c.demo_path == DemoPath::kJoint ? "joint" : "cartesian";
  j["demo_episodes"] = c.demo_episodes;
  j["demo_duration"] = c.demo_duration;
  j["bc_learning_rate"] = c.bc.learning_rate;
  j["bc_iterations"] = c.bc.iterations;
  j["bc_batch_size"] = c.bc.batch_size;
  j["bc_log_std_init"] = c.bc.log_std_init;
  j["hidden"] = c.bc.hidden;
  j["group_size"] = c.grpo.group_size;
  j["groups_per_batch"] = c.grpo.groups_per_batch;
  j["clip_eps"] = c.grpo.clip_eps;
  j["kl_beta"] = c.grpo.kl_beta;
  j["learning_rate"] = c.grpo.learning_rate;
  j["epochs_per_batch"] = c.grpo.epochs_per_batch;
  j["batches"] = c.grpo.batches;
  j["std_floor"] = c.grpo.std_floor;
  j["ratio_mode"] = ratio_mode_name(c.grpo.ratio_mode);
  j["workers"] = c.grpo.workers;
  j["record_wall_time"] = c.grpo.record_wall_time;
  j["reward_mode"] = to_string(c.reward.mode);
  j["lambda"] = c.reward.lambda;
  j["noise_halfwidth"] = c.reward.noise_halfwidth;
  j["eval_episodes"] = c.eval_episodes;
  j["eval_stochastic"] = c.eval_stochastic;
  j["seed"] = c.seed;
  j["seeds"] = c.seeds;
  return j;
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  const auto links = j.at("link_lengths").get<std::vector<double>>();
  const auto lower = j.at("joint_lower").get<std::vector<double>>();
  const auto upper = j.at("joint_upper").get<std::vector<double>>();
  if (lower.size() != links.size() || upper.size() != links.size()) {
    throw ConfigError("link_lengths, joint_lower and joint_upper differ in length");
  }
  std::vector<JointLimit> limits;
  for (std::size_t i = 0; i < links.size(); ++i) limits.push_back({lower[i], upper[i]});
  try {
    c.env.model = ManipulatorModel(links, limits);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  c.env.dt = j.at("dt").get<double>();
  c.env.horizon = j.at("horizon").get<int>();
  c.env.success_radius = j.at("success_radius").get<double>();
  c.env.hold_steps = j.at("hold_steps").get<int>();
  c.env.chunk_size = j.at("chunk_size").get<int>();
  c.env.goal_region.inner = j.at("goal_inner").get<double>();
  c.env.goal_region.outer = j.at("goal_outer").get<double>();
  c.env.goal_region.angle_min = j.at("goal_angle_min").get<double>();
  c.env.goal_region.angle_max = j.at("goal_angle_max").get<double>();
  c.env.action_scale = j.at("action_scale").get<double>();
  c.env.gamma = j.at("gamma").get<double>();
  c.env.randomize_start = j.at("randomize_start").get<bool>();
  const auto jac = j.at("jacobian_mode").get<std::string>();
  if (jac == "analytic") {
    c.env.jacobian_mode = JacobianDerivativeMode::kAnalytic;
  } else if (jac == "finite_difference") {
    c.env.jacobian_mode = JacobianDerivativeMode::kFiniteDifference;
  } else {
    throw ConfigError("jacobian_mode must be analytic or finite_difference, got '" + jac + "'");
  }
  const auto demo = j.at("demo_path").get<std::string>();
  if (demo == "joint") {
    c.demo_path = DemoPath::kJoint;
  } else if (demo == "cartesian") {
    c.demo_path = DemoPath::kCartesian;
  } else {
    throw ConfigError("demo_path must be joint or cartesian, got '" + demo + "'");
  }
  c.demo_episodes = j.at("demo_episodes").get<int>();
  c.demo_duration = j.at("demo_duration").get<double>();
  c.bc.learning_rate = j.at("bc_learning_rate").get<double>();
  c.bc.iterations = j.at("bc_iterations").get<int>();
  c.bc.batch_size = j.at("bc_batch_size").get<int>();
  c.bc.log_std_init = j.at("bc_log_std_init").get<double>();
  c.bc.hidden = j.at("hidden").get<std::vector<int>>();
  c.grpo.group_size = j.at("group_size").get<int>();
  c.grpo.groups_per_batch = j.at("groups_per_batch").get<int>();
  c.grpo.clip_eps = j.at("clip_eps").get<double>();
  c.grpo.kl_beta = j.at("kl_beta").get<double>();
  c.grpo.learning_rate = j.at("learning_rate").get<double>();
  c.grpo.epochs_per_batch = j.at("epochs_per_batch").get<int>();
  c.grpo.batches = j.at("batches").get<int>();
  c.grpo.std_floor = j.at("std_floor").get<double>();
  const auto ratio = j.at("ratio_mode").get<std::string>();
  if (ratio == "per_step") {
    c.grpo.ratio_mode = RatioMode::kPerStep;
  } else if (ratio == "trajectory") {
    c.grpo.ratio_mode = RatioMode::kTrajectory;
  } else {
    throw ConfigError("ratio_mode must be per_step or trajectory, got '" + ratio + "'");
  }
  c.grpo.workers = j.at("workers").get<int>();
  c.grpo.record_wall_time = j.at("record_wall_time").get<bool>();
  try {
    c.reward.mode = parse_reward_mode(j.at("reward_mode").get<std::string>());
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  c.reward.lambda = j.at("lambda").get<double>();
  c.reward.noise_halfwidth = j.at("noise_halfwidth").get<double>();
  c.eval_episodes = j.at("eval_episodes").get<int>();
  c.eval_stochastic = j.at("eval_stochastic").get<bool>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.apply_seed(j.at("seed").get<std::uint64_t>());
  c.validate();
  return c;
}

// A value may replace a default only if its JSON kind matches.
bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_number_unsigned()) return v.is_number_unsigned();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  return false;
}

void merge_key(json& base, const std::string& key, const json& value,
               const std::string& origin) {
  if (!base.contains(key)) {
    throw ConfigError(origin + ": unknown key '" + key + "'");
  }
  if (!same_kind(base[key], value)) {
    throw ConfigError(origin + ": key '" + key + "' has the wrong type (expected " +
                      std::string(base[key].type_name()) + ")");
  }
  base[key] = value;
}

ExperimentConfig rebuild(const json& merged, const std::string& origin) {
  try {
    return from_json(merged);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

}  // namespace

std::string to_json_text(const ExperimentConfig& cfg) { return to_json(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": parse error: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(origin + ": expected a JSON object");
  json merged = to_json(ExperimentConfig{});
  for (const auto& [key, value] : doc.items()) merge_key(merged, key, value, origin);
  return rebuild(merged, origin);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json merged = to_json(cfg);
  merge_key(merged, key, value, "--set");
  cfg = rebuild(merged, "--set " + key);
}

std::filesystem::path output_root() {
  const char* v = std::getenv(kOutputRootEnv);
  if (v && *v) return v;
  return "smoothrl_runs";
}

}  // namespace smoothrl::cli
