#include "smoothrl/cli/commands.hpp"

#include <fstream>

#include "json.hpp"
#include "smoothrl/cli/io.hpp"
#include "smoothrl/errors.hpp"

namespace smoothrl::cli {

using nlohmann::json;

void write_manifest(const fs::path& path, const ExperimentManifest& m,
                    const ExperimentConfig& cfg) {
  if (m.seeds.empty()) throw ContractViolation("manifest seed list is empty");
  json doc{{"format", "smoothrl.manifest"},
           {"version", kFormatVersion},
           {"config_path", m.config_path},
           {"config_hash", m.config_hash},
           {"config", json::parse(to_json_text(cfg))},
           {"seeds", m.seeds},
           {"layout", m.layout},
           {"artifact_versions",
            {{"rollouts", kFormatVersion},
             {"steps", kFormatVersion},
             {"checkpoint", kFormatVersion},
             {"train_log", kFormatVersion},
             {"bc_log", kFormatVersion},
             {"smoothness", kFormatVersion},
             {"metrics", kFormatVersion},
             {"ablation", kFormatVersion}}}};
  std::ofstream out = open_output(path);
  out << doc.dump(1) << '\n';
}

namespace {

std::vector<Rollout> scripted_demos(const ExperimentConfig& cfg, int n) {
  std::vector<Rollout> demos;
  demos.reserve(n);
  for (int i = 0; i < n; ++i) {
    demos.push_back(scripted_episode(cfg.env, demo_episode_seed(cfg.seed, i),
                                     cfg.demo_duration, cfg.demo_path));
  }
  return demos;
}

std::vector<DemoPair> pairs_of(const std::vector<Rollout>& demos) {
  std::vector<DemoPair> pairs;
  for (const Rollout& r : demos) {
    auto p = demo_pairs(r);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  return pairs;
}

EvalMetrics evaluate(const ExperimentConfig& cfg, const PolicyParams& params,
                     std::uint64_t seed) {
  return evaluate_policy(params, cfg.env, cfg.eval_episodes, seed, cfg.eval_stochastic);
}

void print_metrics(std::ostream& os, const std::string& label, const EvalMetrics& m) {
  os << label << ": episodes=" << m.episodes << " success_rate=" << format_double(m.success_rate)
     << " mean_jerk=" << format_double(m.mean_jerk)
     << " peak_jerk=" << format_double(m.peak_jerk) << '\n';
}

fs::path grpo_stem(RewardMode mode) { return "grpo_" + to_string(mode); }

// Runs GRPO and writes checkpoint and log; on a numeric failure writes the
// partial result and rethrows as NumericalFailure.
GrpoResult run_grpo(const ExperimentConfig& cfg, const PolicyParams& init,
                    const fs::path& ckpt, const fs::path& log) {
  const std::string hash = config_hash(cfg);
  try {
    GrpoResult res = grpo_train(init, ReferencePolicy(init), cfg.env, cfg.grpo, cfg.reward);
    save_checkpoint(ckpt, res.params, hash);
    write_train_log(log, res.log, hash);
    return res;
  } catch (const TrainingAborted& e) {
    save_checkpoint(ckpt, e.partial().params, hash);
    write_train_log(log, e.partial().log, hash);
    std::string what = e.what();
    const std::string prefix = "numerical failure: ";
    if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
    throw NumericalFailure(what + "; last finite checkpoint written to " + ckpt.string());
  }
}

}  // namespace

EvalMetrics cmd_demonstrate(const Context& ctx, int n_episodes, const fs::path& out_path,
                            const std::optional<fs::path>& steps_csv) {
  ctx.cfg.validate();
  if (n_episodes < 0) throw ConfigError("episode count must be >= 0");
  if (n_episodes == 0) *ctx.err << "warning: 0 episodes requested, writing an empty file\n";
  const std::vector<Rollout> demos = scripted_demos(ctx.cfg, n_episodes);
  const std::string hash = config_hash(ctx.cfg);
  write_rollouts_jsonl(out_path, demos, ctx.cfg.env, hash);
  if (steps_csv) write_steps_csv(*steps_csv, demos, ctx.cfg.env.model, ctx.cfg.env.dt, hash);
  const EvalMetrics m = summarize(demos);
  print_metrics(*ctx.out, "demonstrate", m);
  return m;
}

TrainArtifacts cmd_train(const Context& ctx, Stage stage, const fs::path& out_dir,
                         const std::optional<fs::path>& demos,
                         const std::optional<fs::path>& init) {
  const ExperimentConfig& cfg = ctx.cfg;
  cfg.validate();
  const std::string hash = config_hash(cfg);
  TrainArtifacts art;
  ExperimentManifest manifest{ctx.config_path, hash, {cfg.seed}, {}};

  if (stage == Stage::kBc) {
    std::vector<Rollout> rollouts;
    if (demos) {
      rollouts = read_rollouts_jsonl(*demos, cfg.env.model).rollouts;
      manifest.layout["demos"] = demos->string();
    } else {
      rollouts = scripted_demos(cfg, cfg.demo_episodes);
    }
    const auto pairs = pairs_of(rollouts);
    if (pairs.empty()) throw ConfigError("no demonstrations to clone");
    const BcResult bc = bc_train(pairs, cfg.policy_shape(), cfg.bc);
    art.checkpoint = out_dir / "bc.ckpt.json";
    art.log = out_dir / "bc_log.csv";
    art.manifest = out_dir / "bc.manifest.json";
    save_checkpoint(art.checkpoint, bc.params, hash);
    write_bc_log(art.log, bc.loss_history, hash);
    *ctx.out << "bc: " << pairs.size() << " demo pairs, final loss "
             << format_double(bc.loss_history.empty() ? 0.0 : bc.loss_history.back()) << '\n';
  } else {
    const fs::path init_path = init ? *init : out_dir / "bc.ckpt.json";
    if (!fs::exists(init_path)) {
      throw ConfigError("grpo needs a BC checkpoint; " + init_path.string() +
                        " does not exist (run train --stage bc first or pass --init)");
    }
    const Checkpoint start = load_checkpoint(init_path, cfg.policy_shape());
    const fs::path stem = grpo_stem(cfg.reward.mode);
    art.checkpoint = out_dir / stem.string().append(".ckpt.json");
    art.log = out_dir / stem.string().append("_log.csv");
    art.manifest = out_dir / stem.string().append(".manifest.json");
    manifest.layout["init"] = init_path.string();
    const GrpoResult res = run_grpo(cfg, start.params, art.checkpoint, art.log);
    const TrainLogRow& last = res.log.empty() ? TrainLogRow{} : res.log.back();
    *ctx.out << "grpo(" << to_string(cfg.reward.mode) << "): " << res.log.size()
             << " batches, last batch success_rate=" << format_double(last.success_rate)
             << " mean_jerk=" << format_double(last.mean_jerk) << '\n';
  }
  manifest.layout["checkpoint"] = art.checkpoint.filename().string();
  manifest.layout["log"] = art.log.filename().string();
  write_manifest(art.manifest, manifest, cfg);
  return art;
}

EvalMetrics cmd_eval(const Context& ctx, const std::optional<fs::path>& checkpoint,
                     int n_episodes, std::uint64_t seed,
                     const std::optional<fs::path>& out_path) {
  ctx.cfg.validate();
  if (n_episodes < 1) throw ConfigError("episode count must be >= 1");
  EvalMetrics m;
  if (checkpoint) {
    const Checkpoint ck = load_checkpoint(*checkpoint, ctx.cfg.policy_shape());
    m = evaluate_policy(ck.params, ctx.cfg.env, n_episodes, seed, ctx.cfg.eval_stochastic);
  } else {
    m = evaluate_scripted(ctx.cfg.env, n_episodes, seed, ctx.cfg.demo_duration,
                          ctx.cfg.demo_path);
  }
  print_metrics(*ctx.out, checkpoint ? "eval" : "eval(scripted)", m);
  if (out_path) {
    std::ofstream out = open_output(*out_path);
    out << csv_header_line(kMetricsKind, config_hash(ctx.cfg)) << '\n'
        << "episodes,success_rate,mean_jerk,peak_jerk\n"
        << m.episodes << ',' << format_double(m.success_rate) << ','
        << format_double(m.mean_jerk) << ',' << format_double(m.peak_jerk) << '\n';
  }
  return m;
}

std::vector<SmoothnessReport> cmd_analyze(const Context& ctx, const fs::path& traj_file,
                                          const std::optional<fs::path>& out_path) {
  const auto trajs = read_trajectories(traj_file, ctx.cfg.env.model);
  std::vector<SmoothnessReport> reports;
  for (const JointTrajectory& t : trajs) {
    reports.push_back(trajectory_smoothness(ctx.cfg.env.model, t, {ctx.cfg.env.jacobian_mode}));
  }
  if (out_path) write_smoothness_csv(*out_path, reports, config_hash(ctx.cfg));
  *ctx.out << SmoothnessReport::csv_header() << '\n';
  for (const SmoothnessReport& r : reports) {
    r.write_csv_row(*ctx.out);
    *ctx.out << '\n';
  }
  return reports;
}

AblationSummary cmd_ablate(const Context& ctx, const std::vector<std::uint64_t>& seeds,
                           const fs::path& out_dir) {
  ctx.cfg.validate();
  if (seeds.empty()) throw ConfigError("ablate needs at least one seed");
  const RewardMode modes[] = {RewardMode::kBinary, RewardMode::kRandom, RewardMode::kSmooth};
  AblationSummary summary;
  std::map<std::string, std::vector<AblationRow>> by_mode;
  ExperimentManifest manifest{ctx.config_path, config_hash(ctx.cfg), seeds, {}};

  for (std::uint64_t s : seeds) {
    ExperimentConfig cfg = ctx.cfg;
    cfg.apply_seed(s);
    const fs::path dir = out_dir / ("seed_" + std::to_string(s));
    const std::string hash = config_hash(cfg);

    const auto demos = scripted_demos(cfg, cfg.demo_episodes);
    write_rollouts_jsonl(dir / "demos.jsonl", demos, cfg.env, hash);
    const auto pairs = pairs_of(demos);
    if (pairs.empty()) throw ConfigError("no demonstrations to clone (demo_episodes = 0)");
    const BcResult bc = bc_train(pairs, cfg.policy_shape(), cfg.bc);
    save_checkpoint(dir / "bc.ckpt.json", bc.params, hash);
    write_bc_log(dir / "bc_log.csv", bc.loss_history, hash);
    const AblationRow bc_row{"bc", s, evaluate(cfg, bc.params, s)};
    summary.bc.push_back(bc_row);
    print_metrics(*ctx.out, "seed " + std::to_string(s) + " bc", bc_row.metrics);

    for (RewardMode mode : modes) {
      cfg.reward.mode = mode;
      const fs::path stem = dir / grpo_stem(mode);
      const GrpoResult res =
          run_grpo(cfg, bc.params, stem.string() + ".ckpt.json", stem.string() + "_log.csv");
      AblationRow row{to_string(mode), s, evaluate(cfg, res.params, s)};
      print_metrics(*ctx.out, "seed " + std::to_string(s) + " " + row.mode, row.metrics);
      by_mode[row.mode].push_back(row);
    }
  }

  auto mean_of = [](const std::vector<AblationRow>& rows) {
    EvalMetrics m;
    for (const AblationRow& r : rows) {
      m.episodes += r.metrics.episodes;
      m.success_rate += r.metrics.success_rate / rows.size();
      m.mean_jerk += r.metrics.mean_jerk / rows.size();
      m.peak_jerk += r.metrics.peak_jerk / rows.size();
    }
    return m;
  };
  for (RewardMode mode : modes) {
    const auto& rows = by_mode[to_string(mode)];
    summary.rows.insert(summary.rows.end(), rows.begin(), rows.end());
    summary.means[to_string(mode)] = mean_of(rows);
  }
  summary.means["bc"] = mean_of(summary.bc);

  const std::string hash = config_hash(ctx.cfg);
  auto write_table = [&](const fs::path& path, const std::vector<AblationRow>& rows,
                         const std::vector<std::string>& mean_modes) {
    std::ofstream out = open_output(path);
    out << csv_header_line(kAblationKind, hash) << '\n'
        << "mode,seed,success_rate,mean_jerk,peak_jerk\n";
    for (const AblationRow& r : rows) {
      out << r.mode << ',' << r.seed << ',' << format_double(r.metrics.success_rate) << ','
          << format_double(r.metrics.mean_jerk) << ',' << format_double(r.metrics.peak_jerk)
          << '\n';
    }
    for (const std::string& mode : mean_modes) {
      const EvalMetrics& m = summary.means[mode];
      out << mode << ",mean," << format_double(m.success_rate) << ','
          << format_double(m.mean_jerk) << ',' << format_double(m.peak_jerk) << '\n';
    }
  };
  write_table(out_dir / "ablation.csv", summary.rows, {"binary", "random", "smooth"});
  write_table(out_dir / "bc_summary.csv", summary.bc, {"bc"});
  manifest.layout["summary"] = "ablation.csv";
  manifest.layout["bc_summary"] = "bc_summary.csv";
  manifest.layout["per_seed"] =
      "seed_<s>/{demos.jsonl,bc.ckpt.json,bc_log.csv,grpo_<mode>.ckpt.json,grpo_<mode>_log.csv}";
  write_manifest(out_dir / "ablation.manifest.json", manifest, ctx.cfg);

  *ctx.out << "mode,success_rate,mean_jerk\n";
  for (const char* mode : {"bc", "binary", "random", "smooth"}) {
    const EvalMetrics& m = summary.means[mode];
    *ctx.out << mode << ',' << format_double(m.success_rate) << ','
             << format_double(m.mean_jerk) << '\n';
  }
  return summary;
}

}  // namespace smoothrl::cli
