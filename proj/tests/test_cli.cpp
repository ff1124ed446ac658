#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "smoothrl/cli/commands.hpp"
#include "smoothrl/cli/config.hpp"
#include "smoothrl/cli/io.hpp"

using namespace smoothrl;
using namespace smoothrl::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smoothrl_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  for (const char* o : {"demo_episodes=3", "bc_iterations=40", "hidden=[8]", "batches=2",
                        "group_size=2", "groups_per_batch=1", "eval_episodes=4"}) {
    apply_override(c, o);
  }
  return c;
}

struct Quiet {
  std::ostringstream out, err;
  Context ctx(ExperimentConfig cfg) { return Context{std::move(cfg), "", &out, &err}; }
};

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig d;
  CHECK(d.grpo.groups_per_batch == 8);
  CHECK_NOTHROW(d.validate());

  const auto c = parse_config_text(R"({"dt": 0.1, "reward_mode": "binary", "seeds": [3, 4]})");
  CHECK(c.env.dt == 0.1);
  CHECK(c.reward.mode == RewardMode::kBinary);
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(c.env.horizon == d.env.horizon);

  CHECK_THROWS_AS(parse_config_text(R"({"dtt": 0.1})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"horizon": "long"})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"ratio_mode": "sideways"})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"group_size": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"seeds": []})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  const fs::path bad = fs::temp_directory_path() / "smoothrl_test_cli_corrupt.json";
  std::ofstream(bad) << "{\"dt\": 0.1,,}";
  CHECK_THROWS_AS(load_config(bad), ConfigError);
  try {
    parse_config_text(R"({"lamda": 0.3})", "x.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("lamda") != std::string::npos);
  }
}

TEST_CASE("overrides and hashing") {
  ExperimentConfig c;
  const std::string h0 = config_hash(c);
  CHECK(h0.size() == 16);
  CHECK(h0 == config_hash(ExperimentConfig{}));
  apply_override(c, "lambda=0.5");
  CHECK(c.reward.lambda == 0.5);
  CHECK(config_hash(c) != h0);
  apply_override(c, "reward_mode=random");
  CHECK(c.reward.mode == RewardMode::kRandom);
  apply_override(c, "hidden=[16,16]");
  CHECK(c.bc.hidden == std::vector<int>{16, 16});
  CHECK_THROWS_AS(apply_override(c, "lambda"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "nope=1"), ConfigError);
  // Round trip through the canonical text.
  const auto back = parse_config_text(to_json_text(c));
  CHECK(to_json_text(back) == to_json_text(c));
  CHECK(config_hash(back) == config_hash(c));

  c.apply_seed(9);
  CHECK(c.env.seed == 9);
  CHECK(c.bc.seed == 9);
  CHECK(c.grpo.seed == 9);
}

TEST_CASE("output root comes from the environment") {
  ::setenv(kOutputRootEnv, "/tmp/somewhere", 1);
  CHECK(output_root() == fs::path("/tmp/somewhere"));
  ::unsetenv(kOutputRootEnv);
  CHECK(output_root() == fs::path("smoothrl_runs"));
}

TEST_CASE("checkpoints") {
  const fs::path dir = scratch("ckpt");
  const PolicyShape shape{5, 4, {6, 3}, 0.2};
  PolicyParams p = init_policy(shape, 4);
  p.log_std[1] = -1.25;
  save_checkpoint(dir / "a.json", p, "00ff");
  const std::string text = slurp(dir / "a.json");
  CHECK(text.find("\"config_hash\"") != std::string::npos);
  CHECK(text.find("layers.0.weight") != std::string::npos);

  const Checkpoint c = load_checkpoint(dir / "a.json", shape);
  CHECK(c.config_hash == "00ff");
  CHECK(c.params.to_vector() == p.to_vector());

  SUBCASE("shape mismatch") {
    PolicyShape other = shape;
    other.hidden = {6, 4};
    CHECK_THROWS_AS(load_checkpoint(dir / "a.json", other), CheckpointMismatch);
    other = shape;
    other.obs_dim = 6;
    CHECK_THROWS_AS(load_checkpoint(dir / "a.json", other), CheckpointMismatch);
  }
  SUBCASE("version mismatch") {
    std::string t = text;
    const auto pos = t.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    t.replace(pos, 12, "\"version\": 2");
    std::ofstream(dir / "b.json") << t;
    CHECK_THROWS_AS(load_checkpoint(dir / "b.json", shape), CheckpointMismatch);
  }
  SUBCASE("malformed") {
    std::ofstream(dir / "c.json") << "{\"format\": ";
    CHECK_THROWS_AS(load_checkpoint(dir / "c.json", shape), FormatError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json", shape), ConfigError);
  }
}

TEST_CASE("file headers carry version and config hash") {
  const fs::path dir = scratch("headers");
  CHECK(csv_header_line("steps", "abc") == "# smoothrl.steps version=1 config_hash=abc");
  write_train_log(dir / "log.csv", {TrainLogRow{0, 0.5, 0.5, 0.1, 0.0, 0.0, 0.0}}, "abc");
  std::istringstream log(slurp(dir / "log.csv"));
  std::string line;
  std::getline(log, line);
  CHECK(line == "# smoothrl.train_log version=1 config_hash=abc");
  std::getline(log, line);
  CHECK(line == "batch,mean_reward,success_rate,mean_jerk,kl,clip_frac,wall_ms");

  write_smoothness_csv(dir / "s.csv", {SmoothnessReport{1.0, 2.0, 3.0, 4}}, "abc");
  std::istringstream sm(slurp(dir / "s.csv"));
  std::getline(sm, line);
  CHECK(line.rfind("# smoothrl.smoothness version=1 config_hash=abc", 0) == 0);
  std::getline(sm, line);
  CHECK(line == "mean_jerk,peak_jerk,mean_sq_jerk,horizon");
  std::getline(sm, line);
  CHECK(line == "1,2,3,4");
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("rollouts and per-step CSV round trip") {
  const fs::path dir = scratch("roundtrip");
  Quiet q;
  const auto ctx = q.ctx(small_config());
  cmd_demonstrate(ctx, 3, dir / "demos.jsonl", dir / "steps.csv");

  const auto& model = ctx.cfg.env.model;
  const RolloutFile rf = read_rollouts_jsonl(dir / "demos.jsonl", model);
  REQUIRE(rf.rollouts.size() == 3u);
  CHECK(rf.config_hash == config_hash(ctx.cfg));
  const Rollout fresh = scripted_episode(ctx.cfg.env, rf.rollouts[0].episode_seed,
                                         ctx.cfg.demo_duration);
  for (int t = 0; t < fresh.steps(); ++t) {
    CHECK(rf.rollouts[0].actions[t] == fresh.actions[t]);
    CHECK(rf.rollouts[0].observations[t].to_vector() == fresh.observations[t].to_vector());
  }

  std::istringstream steps(slurp(dir / "steps.csv"));
  std::string line;
  std::getline(steps, line);
  CHECK(line.rfind("# smoothrl.steps version=1 config_hash=" + config_hash(ctx.cfg), 0) == 0);
  std::getline(steps, line);
  CHECK(line == "t,q1,q2,a1,a2,ee_x,ee_y,success_latched");

  const auto from_csv = cmd_analyze(ctx, dir / "steps.csv", dir / "an_csv.csv");
  const auto from_jsonl = cmd_analyze(ctx, dir / "demos.jsonl", std::nullopt);
  REQUIRE(from_csv.size() == 3u);
  REQUIRE(from_jsonl.size() == 3u);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(from_csv[i].mean_jerk_norm - rf.rollouts[i].smoothness.mean_jerk_norm) < 1e-9);
    CHECK(std::abs(from_jsonl[i].mean_jerk_norm - rf.rollouts[i].smoothness.mean_jerk_norm) < 1e-9);
  }
  CHECK(fs::exists(dir / "an_csv.csv"));
}

TEST_CASE("analyze oracles on hand-written CSV") {
  const fs::path dir = scratch("oracle");
  Quiet q;
  // One-link arm: constant rate 1 rad/s gives |jerk| = 1.
  const ExperimentConfig cfg = parse_config_text(
      R"({"link_lengths": [1.0], "joint_lower": [-100.0], "joint_upper": [100.0],
          "goal_inner": 0.5, "goal_outer": 0.9})");
  const auto ctx = q.ctx(cfg);
  const double dt = 0.005;
  {
    std::ofstream f(dir / "circle.csv");
    f << "# smoothrl.steps version=1 config_hash=0 dt=0.005 dof=1\n";
    f << "t,q1,a1,ee_x,ee_y,success_latched\n";
    for (int i = 0; i <= 400; ++i) f << i << ',' << format_double(i * dt) << ",0,0,0,0\n";
    std::ofstream g(dir / "still.csv");
    g << "# smoothrl.steps version=1 config_hash=0 dt=0.005 dof=1\n";
    g << "t,q1,a1,ee_x,ee_y,success_latched\n";
    for (int i = 0; i < 10; ++i) g << i << ",0.3,0,0,0,0\n";
  }
  const auto circle = cmd_analyze(ctx, dir / "circle.csv", std::nullopt);
  REQUIRE(circle.size() == 1u);
  CHECK(circle[0].mean_jerk_norm == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(cmd_analyze(ctx, dir / "still.csv", std::nullopt)[0].mean_jerk_norm == 0.0);

  SUBCASE("malformed row names the line") {
    std::ofstream f(dir / "bad.csv");
    f << "# smoothrl.steps version=1 config_hash=0 dt=0.005 dof=1\n";
    f << "t,q1,a1,ee_x,ee_y,success_latched\n";
    f << "0,0.1,0,0,0,0\n1,oops,0,0,0,0\n";
    f.close();
    try {
      cmd_analyze(ctx, dir / "bad.csv", std::nullopt);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(":4") != std::string::npos);
    }
  }
  SUBCASE("dof mismatch") {
    ExperimentConfig two;
    CHECK_THROWS_AS(cmd_analyze(q.ctx(two), dir / "circle.csv", std::nullopt), ContractViolation);
  }
}

TEST_CASE("demonstrate with zero episodes writes a header-only file") {
  const fs::path dir = scratch("empty");
  Quiet q;
  cmd_demonstrate(q.ctx(small_config()), 0, dir / "d.jsonl");
  CHECK(q.err.str().find("warning") != std::string::npos);
  const std::string text = slurp(dir / "d.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(read_rollouts_jsonl(dir / "d.jsonl", ExperimentConfig{}.env.model).rollouts.empty());
  CHECK_THROWS_AS(cmd_demonstrate(q.ctx(small_config()), -1, dir / "e.jsonl"), ConfigError);
}

TEST_CASE("train and eval commands") {
  const fs::path dir = scratch("train");
  Quiet q;
  const auto ctx = q.ctx(small_config());
  CHECK_THROWS_AS(cmd_train(ctx, Stage::kGrpo, dir), ConfigError);

  const auto bc = cmd_train(ctx, Stage::kBc, dir);
  CHECK(bc.checkpoint == dir / "bc.ckpt.json");
  CHECK(fs::exists(dir / "bc_log.csv"));
  CHECK(fs::exists(dir / "bc.manifest.json"));
  const auto g = cmd_train(ctx, Stage::kGrpo, dir);
  CHECK(g.checkpoint == dir / "grpo_smooth.ckpt.json");
  CHECK(fs::exists(g.log));

  const std::string ckpt = slurp(g.checkpoint), log = slurp(g.log);
  cmd_train(ctx, Stage::kGrpo, dir);
  CHECK(slurp(g.checkpoint) == ckpt);
  CHECK(slurp(g.log) == log);

  const EvalMetrics m = cmd_eval(ctx, g.checkpoint, 3, 0, dir / "metrics.csv");
  CHECK(m.episodes == 3);
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(cmd_eval(ctx, std::nullopt, 3, 0).success_rate == 1.0);
  CHECK_THROWS_AS(cmd_eval(ctx, g.checkpoint, 0, 0), ConfigError);

  // A checkpoint from a different architecture is rejected.
  auto other = small_config();
  apply_override(other, "hidden=[9]");
  CHECK_THROWS_AS(cmd_eval(q.ctx(other), g.checkpoint, 3, 0), CheckpointMismatch);
}

TEST_CASE("scripted demonstrations succeed on the default config") {
  const fs::path dir = scratch("demo100");
  Quiet q;
  const EvalMetrics m = cmd_demonstrate(q.ctx(ExperimentConfig{}), 100, dir / "d.jsonl");
  CHECK(m.episodes == 100);
  CHECK(m.success_rate == 1.0);
  CHECK(q.out.str().find("success_rate=1") != std::string::npos);
}

TEST_CASE("eval is repeatable") {
  Quiet q;
  const auto ctx = q.ctx(small_config());
  const EvalMetrics a = cmd_eval(ctx, std::nullopt, 1, 3), b = cmd_eval(ctx, std::nullopt, 1, 3);
  CHECK(a.mean_jerk == b.mean_jerk);
  CHECK(a.success_rate == b.success_rate);
}

TEST_CASE("ablate writes one row per mode and seed plus means") {
  const fs::path dir = scratch("ablate");
  Quiet q;
  const std::vector<std::uint64_t> seeds = {0, 1};
  const AblationSummary s = cmd_ablate(q.ctx(small_config()), seeds, dir);
  CHECK(s.rows.size() == 6u);
  CHECK(s.bc.size() == 2u);
  CHECK(s.means.size() == 4u);
  std::istringstream csv(slurp(dir / "ablation.csv"));
  std::string line;
  int data = 0, means = 0;
  std::getline(csv, line);
  CHECK(line.rfind("# smoothrl.ablation version=1", 0) == 0);
  std::getline(csv, line);
  CHECK(line == "mode,seed,success_rate,mean_jerk,peak_jerk");
  while (std::getline(csv, line)) {
    if (line.find(",mean,") != std::string::npos) {
      ++means;
    } else {
      ++data;
    }
  }
  CHECK(data == 6);
  CHECK(means == 3);
  CHECK(fs::exists(dir / "seed_1" / "grpo_random.ckpt.json"));
  CHECK(fs::exists(dir / "bc_summary.csv"));
  CHECK(fs::exists(dir / "ablation.manifest.json"));
  CHECK_THROWS_AS(cmd_ablate(q.ctx(small_config()), {}, dir), ConfigError);
}
