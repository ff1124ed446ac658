// smoothrl command-line tool: demonstrate, train, eval, analyze, ablate.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "smoothrl/cli/commands.hpp"
#include "smoothrl/cli/io.hpp"
#include "smoothrl/errors.hpp"

namespace {

using namespace smoothrl;
using namespace smoothrl::cli;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "flat JSON experiment config");
  cmd->add_option("--set", c.overrides, "key=value override, repeatable");
  cmd->add_option("--seed", c.seed, "experiment seed (overrides the config)");
}

Context make_context(const Common& c) {
  Context ctx{c.config.empty() ? ExperimentConfig{} : load_config(c.config), c.config,
              &std::cout, &std::cerr};
  for (const std::string& o : c.overrides) apply_override(ctx.cfg, o);
  if (c.seed) ctx.cfg.apply_seed(*c.seed);
  return ctx;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothness-aware GRPO on a planar reaching arm"};
  app.require_subcommand(1);

  Common demo_c, train_c, eval_c, analyze_c, ablate_c;

  auto* demo = app.add_subcommand("demonstrate", "write scripted min-jerk demos");
  add_common(demo, demo_c);
  int demo_n = -1;
  std::string demo_out, demo_steps;
  demo->add_option("-n,--episodes", demo_n, "episode count (default: demo_episodes)");
  demo->add_option("-o,--out", demo_out, "JSON-lines output (default: <root>/demos.jsonl)");
  demo->add_option("--steps-csv", demo_steps, "also write the per-step CSV here");

  auto* train = app.add_subcommand("train", "behavior cloning or GRPO fine-tuning");
  add_common(train, train_c);
  std::string stage_name, train_out, train_demos, train_init, reward_name;
  train->add_option("--stage", stage_name, "bc or grpo")
      ->required()
      ->check(CLI::IsMember({"bc", "grpo"}));
  train->add_option("--reward", reward_name, "binary, random or smooth (grpo)")
      ->check(CLI::IsMember({"binary", "random", "smooth"}));
  train->add_option("-o,--out", train_out, "output directory (default: <root>)");
  train->add_option("--demos", train_demos, "demo file for bc (default: generate)");
  train->add_option("--init", train_init, "BC checkpoint for grpo (default: <out>/bc.ckpt.json)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint or the scripted controller");
  add_common(eval, eval_c);
  std::string eval_ckpt, eval_out;
  bool eval_scripted = false, eval_stochastic = false;
  int eval_n = -1;
  eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint");
  eval->add_flag("--scripted", eval_scripted, "evaluate the scripted controller");
  eval->add_flag("--stochastic", eval_stochastic, "sample actions instead of the mean");
  eval->add_option("-n,--episodes", eval_n, "episode count (default: eval_episodes)");
  eval->add_option("-o,--out", eval_out, "metrics CSV output");

  auto* analyze = app.add_subcommand("analyze", "smoothness report per episode of a trajectory file");
  add_common(analyze, analyze_c);
  std::string analyze_in, analyze_out;
  analyze->add_option("input", analyze_in, "per-step CSV or JSON-lines file")->required();
  analyze->add_option("-o,--out", analyze_out, "smoothness CSV output");

  auto* ablate = app.add_subcommand("ablate", "binary / random / smooth reward comparison");
  add_common(ablate, ablate_c);
  std::string ablate_out;
  std::vector<std::uint64_t> ablate_seeds;
  ablate->add_option("--seeds", ablate_seeds, "seed list (default: config seeds)")->delimiter(',');
  ablate->add_option("-o,--out", ablate_out, "output directory (default: <root>/ablate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (demo->parsed()) {
      const Context ctx = make_context(demo_c);
      const int n = demo_n >= 0 ? demo_n : ctx.cfg.demo_episodes;
      const fs::path out = demo_out.empty() ? output_root() / "demos.jsonl" : fs::path(demo_out);
      cmd_demonstrate(ctx, n, out, opt_path(demo_steps));
    } else if (train->parsed()) {
      Context ctx = make_context(train_c);
      const Stage stage = stage_name == "bc" ? Stage::kBc : Stage::kGrpo;
      if (!reward_name.empty()) ctx.cfg.reward.mode = parse_reward_mode(reward_name);
      const fs::path out = train_out.empty() ? output_root() : fs::path(train_out);
      const TrainArtifacts art =
          cmd_train(ctx, stage, out, opt_path(train_demos), opt_path(train_init));
      std::cout << "checkpoint: " << art.checkpoint.string() << "\nlog: " << art.log.string()
                << '\n';
    } else if (eval->parsed()) {
      Context ctx = make_context(eval_c);
      if (eval_scripted == !eval_ckpt.empty()) {
        throw ConfigError("eval needs exactly one of --checkpoint or --scripted");
      }
      if (eval_stochastic) ctx.cfg.eval_stochastic = true;
      const int n = eval_n >= 0 ? eval_n : ctx.cfg.eval_episodes;
      cmd_eval(ctx, opt_path(eval_ckpt), n, ctx.cfg.seed, opt_path(eval_out));
    } else if (analyze->parsed()) {
      const Context ctx = make_context(analyze_c);
      cmd_analyze(ctx, analyze_in, opt_path(analyze_out));
    } else if (ablate->parsed()) {
      const Context ctx = make_context(ablate_c);
      const auto seeds = ablate_seeds.empty() ? ctx.cfg.seeds : ablate_seeds;
      const fs::path out = ablate_out.empty() ? output_root() / "ablate" : fs::path(ablate_out);
      cmd_ablate(ctx, seeds, out);
    }
  } catch (const NumericalFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const TrainingAborted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
