#include "smoothrl/cli/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "smoothrl/cli/config.hpp"
#include "smoothrl/errors.hpp"
#include "smoothrl/finite_difference.hpp"

namespace smoothrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_header_line(const std::string& kind, const std::string& hash,
                            const std::string& extra) {
  std::string line = "# smoothrl." + kind + " version=" + std::to_string(kFormatVersion) +
                     " config_hash=" + hash;
  if (!extra.empty()) line += " " + extra;
  return line;
}

namespace {

json header_object(const std::string& kind, const std::string& hash) {
  return json{{"format", "smoothrl." + kind},
              {"version", kFormatVersion},
              {"config_hash", hash}};
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json vec_list(const std::vector<VecX>& vs) {
  json a = json::array();
  for (const VecX& v : vs) a.push_back(to_std(v));
  return a;
}

VecX to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

[[noreturn]] void bad_line(const fs::path& path, int line, const std::string& what) {
  throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
}

void check_header(const json& h, const std::string& kind, const fs::path& path) {
  if (!h.is_object() || h.value("format", "") != "smoothrl." + kind) {
    bad_line(path, 1, "not a smoothrl." + kind + " file");
  }
  if (h.value("version", -1) != kFormatVersion) {
    bad_line(path, 1, "unsupported version " + h.value("version", json()).dump());
  }
}

// Parses "# smoothrl.<kind> key=value ..." into a key map.
std::map<std::string, std::string> parse_csv_header(const std::string& line,
                                                    const std::string& kind,
                                                    const fs::path& path) {
  std::istringstream is(line);
  std::string hash_mark, tag;
  is >> hash_mark >> tag;
  if (hash_mark != "#" || tag != "smoothrl." + kind) {
    bad_line(path, 1, "not a smoothrl." + kind + " file");
  }
  std::map<std::string, std::string> fields;
  std::string kv;
  while (is >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) bad_line(path, 1, "malformed header field '" + kv + "'");
    fields[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (fields["version"] != std::to_string(kFormatVersion)) {
    bad_line(path, 1, "unsupported version '" + fields["version"] + "'");
  }
  return fields;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_rollouts_jsonl(const fs::path& path, const std::vector<Rollout>& rollouts,
                          const EnvConfig& env, const std::string& hash) {
  std::ofstream out = open_output(path);
  json h = header_object(kRolloutsKind, hash);
  h["dof"] = env.dof();
  h["dt"] = env.dt;
  out << h.dump() << '\n';
  for (const Rollout& r : rollouts) {
    json rec;
    rec["episode_seed"] = r.episode_seed;
    rec["chunk_size"] = r.chunk_size;
    rec["dt"] = r.joint_traj.dt();
    rec["horizon"] = env.horizon;
    rec["goal"] = to_std(r.goal);
    rec["success"] = r.success;
    rec["q"] = vec_list(r.joint_traj.samples());
    rec["actions"] = vec_list(r.actions);
    rec["behavior_logps"] = r.behavior_logps;
    rec["success_trace"] = r.success_trace;
    rec["smoothness"] = {{"mean_jerk", r.smoothness.mean_jerk_norm},
                         {"peak_jerk", r.smoothness.peak_jerk_norm},
                         {"mean_sq_jerk", r.smoothness.mean_sq_jerk},
                         {"horizon", r.smoothness.horizon}};
    out << rec.dump() << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

RolloutFile read_rollouts_jsonl(const fs::path& path, const ManipulatorModel& model) {
  std::ifstream in = open_input(path);
  RolloutFile file;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      bad_line(path, lineno, e.what());
    }
    if (lineno == 1) {
      check_header(rec, kRolloutsKind, path);
      file.config_hash = rec.value("config_hash", "");
      file.dt = rec.value("dt", 0.0);
      if (rec.value("dof", model.dof()) != model.dof()) {
        throw ContractViolation(path.string() + ": file dof " +
                                rec["dof"].dump() + " does not match the model dof " +
                                std::to_string(model.dof()));
      }
      continue;
    }
    try {
      std::vector<VecX> q;
      for (const auto& s : rec.at("q")) q.push_back(to_eigen(s.get<std::vector<double>>()));
      if (q.size() < 2) bad_line(path, lineno, "need at least 2 q samples");
      for (const VecX& s : q) {
        if (s.size() != model.dof()) {
          throw ContractViolation(path.string() + ":" + std::to_string(lineno) +
                                  ": q has dof " + std::to_string(s.size()) +
                                  ", model has " + std::to_string(model.dof()));
        }
      }
      Rollout r;
      r.episode_seed = rec.at("episode_seed").get<std::int64_t>();
      r.chunk_size = rec.at("chunk_size").get<int>();
      r.goal = to_eigen(rec.at("goal").get<std::vector<double>>());
      r.success = rec.at("success").get<bool>();
      const int horizon = rec.at("horizon").get<int>();
      for (const auto& a : rec.at("actions")) {
        r.actions.push_back(to_eigen(a.get<std::vector<double>>()));
      }
      r.behavior_logps = rec.at("behavior_logps").get<std::vector<double>>();
      r.success_trace = rec.at("success_trace").get<std::vector<bool>>();
      if (r.actions.size() + 1 != q.size() || r.behavior_logps.size() != r.actions.size() ||
          r.success_trace.size() != q.size() || r.goal.size() != 2) {
        bad_line(path, lineno, "inconsistent record lengths");
      }
      for (std::size_t t = 0; t < r.actions.size(); ++t) {
        r.observations.push_back(
            Observation{q[t], r.goal, static_cast<double>(t) / horizon});
      }
      r.joint_traj = JointTrajectory(rec.at("dt").get<double>(), std::move(q));
      if (r.joint_traj.size() >= fd::min_samples(3)) {
        r.smoothness = trajectory_smoothness(model, r.joint_traj);
      }
      file.rollouts.push_back(std::move(r));
    } catch (const json::exception& e) {
      bad_line(path, lineno, e.what());
    }
  }
  if (lineno == 0) bad_line(path, 1, "empty file, header missing");
  return file;
}

void write_steps_csv(const fs::path& path, const std::vector<Rollout>& rollouts,
                     const ManipulatorModel& model, double dt, const std::string& hash) {
  std::ofstream out = open_output(path);
  const int dof = model.dof();
  out << csv_header_line(kStepsKind, hash,
                         "dt=" + format_double(dt) + " dof=" + std::to_string(dof))
      << '\n';
  out << 't';
  for (int i = 1; i <= dof; ++i) out << ",q" << i;
  for (int i = 1; i <= dof; ++i) out << ",a" << i;
  out << ",ee_x,ee_y,success_latched\n";
  out.precision(17);
  for (const Rollout& r : rollouts) {
    const auto& q = r.joint_traj.samples();
    for (std::size_t t = 0; t < q.size(); ++t) {
      out << t;
      for (int i = 0; i < dof; ++i) out << ',' << q[t][i];
      for (int i = 0; i < dof; ++i) {
        out << ',' << (t < r.actions.size() ? r.actions[t][i] : 0.0);
      }
      const Vec2 ee = forward_kinematics(model, q[t]);
      out << ',' << ee.x() << ',' << ee.y() << ','
          << (t < r.success_trace.size() && r.success_trace[t] ? 1 : 0) << '\n';
    }
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

std::vector<JointTrajectory> read_steps_csv(const fs::path& path,
                                            const ManipulatorModel& model) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) bad_line(path, 1, "empty file, header missing");
  auto fields = parse_csv_header(line, kStepsKind, path);
  double dt = 0.0;
  int dof = 0;
  try {
    dt = std::stod(fields.at("dt"));
    dof = std::stoi(fields.at("dof"));
  } catch (const std::exception&) {
    bad_line(path, 1, "header needs numeric dt= and dof= fields");
  }
  if (dof != model.dof()) {
    throw ContractViolation(path.string() + ": file dof " + std::to_string(dof) +
                            " does not match the model dof " +
                            std::to_string(model.dof()));
  }
  if (!std::getline(in, line)) bad_line(path, 2, "column header missing");
  const std::size_t ncols = 1 + 2 * static_cast<std::size_t>(dof) + 3;

  std::vector<JointTrajectory> out;
  std::vector<VecX> current;
  auto flush = [&](int lineno) {
    if (current.empty()) return;
    if (current.size() < 2) bad_line(path, lineno, "episode with a single sample");
    out.emplace_back(dt, std::move(current));
    current.clear();
  };
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cells.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        bad_line(path, lineno, "not a number: '" + cell + "'");
      }
    }
    if (cells.size() != ncols) {
      bad_line(path, lineno, "expected " + std::to_string(ncols) + " columns, got " +
                                 std::to_string(cells.size()));
    }
    if (cells[0] == 0.0) flush(lineno);
    if (cells[0] != static_cast<double>(current.size())) {
      bad_line(path, lineno, "step index out of sequence");
    }
    current.push_back(Eigen::Map<VecX>(cells.data() + 1, dof));
  }
  flush(lineno);
  return out;
}

std::vector<JointTrajectory> read_trajectories(const fs::path& path,
                                               const ManipulatorModel& model) {
  std::ifstream in = open_input(path);
  std::string first;
  std::getline(in, first);
  in.close();
  if (first.rfind("# smoothrl.steps", 0) == 0) return read_steps_csv(path, model);
  std::vector<JointTrajectory> out;
  for (Rollout& r : read_rollouts_jsonl(path, model).rollouts) {
    out.push_back(std::move(r.joint_traj));
  }
  return out;
}

void save_checkpoint(const fs::path& path, const PolicyParams& params,
                     const std::string& hash) {
  json doc = header_object(kCheckpointKind, hash);
  doc["policy"] = {{"obs_dim", params.shape.obs_dim},
                   {"act_dim", params.shape.act_dim},
                   {"hidden", params.shape.hidden},
                   {"action_scale", params.shape.action_scale}};
  json tensors = json::array();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w =
        layer.weight;
    const std::string prefix = "layers." + std::to_string(l);
    tensors.push_back({{"name", prefix + ".weight"},
                       {"shape", {w.rows(), w.cols()}},
                       {"values", std::vector<double>(w.data(), w.data() + w.size())}});
    tensors.push_back({{"name", prefix + ".bias"},
                       {"shape", {layer.bias.size()}},
                       {"values", to_std(layer.bias)}});
  }
  tensors.push_back({{"name", "log_std"},
                     {"shape", {params.log_std.size()}},
                     {"values", to_std(params.log_std)}});
  doc["tensors"] = tensors;
  std::ofstream out = open_output(path);
  out << doc.dump(1) << '\n';
  if (!out) throw ConfigError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path, const PolicyShape& expected) {
  std::ifstream in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "smoothrl.checkpoint") {
    throw FormatError(path.string() + ": not a smoothrl checkpoint");
  }
  if (doc.value("version", -1) != kFormatVersion) {
    throw CheckpointMismatch(path.string() + ": unsupported checkpoint version " +
                             doc.value("version", json()).dump());
  }
  Checkpoint ck;
  try {
    ck.config_hash = doc.at("config_hash").get<std::string>();
    const json& p = doc.at("policy");
    PolicyShape shape{p.at("obs_dim").get<int>(), p.at("act_dim").get<int>(),
                      p.at("hidden").get<std::vector<int>>(),
                      p.at("action_scale").get<double>()};
    if (!(shape == expected)) {
      throw CheckpointMismatch(
          path.string() + ": policy shape (obs " + std::to_string(shape.obs_dim) +
          ", act " + std::to_string(shape.act_dim) + ", hidden " + p["hidden"].dump() +
          ", scale " + format_double(shape.action_scale) +
          ") does not match the config (obs " + std::to_string(expected.obs_dim) +
          ", act " + std::to_string(expected.act_dim) + ", hidden " +
          json(expected.hidden).dump() + ", scale " +
          format_double(expected.action_scale) + ")");
    }
    ck.params = zero_policy(expected);
    std::map<std::string, const json*> by_name;
    for (const json& t : doc.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    auto fill = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols,
                    bool matrix, auto& target) {
      const auto it = by_name.find(name);
      if (it == by_name.end()) throw CheckpointMismatch(path.string() + ": missing tensor " + name);
      const json& t = *it->second;
      const auto shape_v = t.at("shape").get<std::vector<Eigen::Index>>();
      const std::vector<Eigen::Index> want =
          matrix ? std::vector<Eigen::Index>{rows, cols} : std::vector<Eigen::Index>{rows};
      if (shape_v != want) {
        throw CheckpointMismatch(path.string() + ": tensor " + name + " has shape " +
                                 t["shape"].dump() + ", expected " + json(want).dump());
      }
      const auto values = t.at("values").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
        throw CheckpointMismatch(path.string() + ": tensor " + name +
                                 " value count does not match its shape");
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          if constexpr (std::is_same_v<std::decay_t<decltype(target)>, Eigen::MatrixXd>) {
            target(r, c) = values[r * cols + c];
          } else {
            target[r] = values[r];
          }
        }
      }
    };
    for (std::size_t l = 0; l < ck.params.layers.size(); ++l) {
      DenseLayer& layer = ck.params.layers[l];
      const std::string prefix = "layers." + std::to_string(l);
      fill(prefix + ".weight", layer.weight.rows(), layer.weight.cols(), true, layer.weight);
      fill(prefix + ".bias", layer.bias.size(), 1, false, layer.bias);
    }
    fill("log_std", ck.params.log_std.size(), 1, false, ck.params.log_std);
    if (by_name.size() != 2 * ck.params.layers.size() + 1) {
      throw CheckpointMismatch(path.string() + ": unexpected extra tensors");
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!ck.params.all_finite()) {
    throw FormatError(path.string() + ": non-finite parameter values");
  }
  return ck;
}

void write_train_log(const fs::path& path, const std::vector<TrainLogRow>& rows,
                     const std::string& hash) {
  std::ofstream out = open_output(path);
  out << csv_header_line(kTrainLogKind, hash) << '\n'
      << "batch,mean_reward,success_rate,mean_jerk,kl,clip_frac,wall_ms\n";
  out.precision(17);
  for (const TrainLogRow& r : rows) {
    out << r.batch << ',' << r.mean_reward << ',' << r.success_rate << ','
        << r.mean_jerk << ',' << r.kl << ',' << r.clip_frac << ',' << r.wall_ms << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

void write_bc_log(const fs::path& path, const std::vector<double>& losses,
                  const std::string& hash) {
  std::ofstream out = open_output(path);
  out << csv_header_line(kBcLogKind, hash) << '\n' << "iteration,loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < losses.size(); ++i) out << i << ',' << losses[i] << '\n';
  if (!out) throw ConfigError("write failed for " + path.string());
}

void write_smoothness_csv(const fs::path& path,
                          const std::vector<SmoothnessReport>& reports,
                          const std::string& hash) {
  std::ofstream out = open_output(path);
  out << csv_header_line(kSmoothnessKind, hash) << '\n'
      << SmoothnessReport::csv_header() << '\n';
  for (const SmoothnessReport& r : reports) {
    r.write_csv_row(out);
    out << '\n';
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace smoothrl::cli
