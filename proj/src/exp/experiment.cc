// Copyright 2026 The Dynaware Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dynaware/exp/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dynaware/common/error.h"
#include "dynaware/common/rng.h"
#include "dynaware/nn/checkpoint.h"
#include "dynaware/sim/simulator.h"

namespace dynaware::exp {
namespace {

void Flatten(const nlohmann::json& j, const std::string& prefix,
             std::map<std::string, nlohmann::json>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      Flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else {
    out[prefix] = j;
  }
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

Arm ParseArm(const std::string& name) {
  if (name == "baseline") return Arm::kBaseline;
  if (name == "dyn_no_aux") return Arm::kDynNoAux;
  if (name == "dyn_aux") return Arm::kDynAux;
  throw ConfigError("unknown arm '" + name + "' (expected baseline, dyn_no_aux, dyn_aux)");
}

const char* ArmName(Arm arm) {
  switch (arm) {
    case Arm::kBaseline:
      return "baseline";
    case Arm::kDynNoAux:
      return "dyn_no_aux";
    case Arm::kDynAux:
      return "dyn_aux";
  }
  return "?";
}

learner::IdHeadMode ArmIdMode(Arm arm) {
  switch (arm) {
    case Arm::kBaseline:
      return learner::IdHeadMode::kOff;
    case Arm::kDynNoAux:
      return learner::IdHeadMode::kRewardOnly;
    case Arm::kDynAux:
      return learner::IdHeadMode::kRewardPlusAux;
  }
  return learner::IdHeadMode::kOff;
}

std::vector<CommandSegment> EvalConfig::DefaultScript() {
  return {{2.0, 0.3}, {6.0, 0.6}, {6.0, -0.6}, {6.0, 0.6}};
}

int EvalConfig::ScriptSteps() const {
  double total = 0.0;
  for (const CommandSegment& s : script) total += s.duration;
  return static_cast<int>(std::lround(total / sim::kControlDt));
}

double EvalConfig::CommandAt(int step) const {
  const double t = step * sim::kControlDt;
  double end = 0.0;
  for (const CommandSegment& s : script) {
    end += s.duration;
    if (t < end - 1e-9) return s.lin_vel;
  }
  return script.empty() ? 0.0 : script.back().lin_vel;
}

void EvalConfig::Validate() const {
  if (script.empty()) throw ConfigError("eval: command script is empty (the log would be empty)");
  for (const CommandSegment& s : script) {
    if (!(s.duration > 0.0)) throw ConfigError("eval: script segment durations must be > 0");
  }
  if (ScriptSteps() < 3) throw ConfigError("eval: command script shorter than 3 control steps");
  if (episodes < 1) throw ConfigError("eval: episodes must be >= 1");
  if (!(thresholds.torque > 0.0) || !(thresholds.torque_rate > 0.0)) {
    throw ConfigError("eval: safety thresholds must be > 0");
  }
}

nlohmann::json ExperimentConfig::Echo() const {
  nlohmann::json j;
  j["format_version"] = format_version;
  j["name"] = name;
  j["seeds"] = seeds;
  j["arm"] = ArmName(arm);
  j["train"] = train.ToJson();
  j["distill"] = distill.ToJson();
  nlohmann::json script = nlohmann::json::array();
  for (const CommandSegment& s : eval.script) script.push_back({s.duration, s.lin_vel});
  j["eval"] = {{"episodes", eval.episodes},
               {"script", script},
               {"safe_torque", eval.thresholds.torque},
               {"safe_torque_rate", eval.thresholds.torque_rate}};
  j["actuator_data_steps"] = actuator_data_steps;
  return j;
}

ExperimentConfig LoadExperimentConfig(KvConfig kv, const Overrides& overrides) {
  ExperimentConfig cfg;
  cfg.format_version = static_cast<int>(kv.GetInt("experiment.format_version"));
  if (cfg.format_version != kConfigFormatVersion) {
    throw ConfigError(kv.Where("experiment.format_version") + ": unsupported format_version " +
                      std::to_string(cfg.format_version) + " (expected " +
                      std::to_string(kConfigFormatVersion) + ")");
  }
  cfg.name = kv.GetString("experiment.name");
  if (overrides.seed) {
    kv.GetDoubleList("experiment.seeds", {});
    cfg.seeds = {*overrides.seed};
  } else {
    cfg.seeds.clear();
    for (double s : kv.GetDoubleList("experiment.seeds", {1, 2, 3})) {
      if (s < 0 || s != std::floor(s)) {
        throw ConfigError(kv.Where("experiment.seeds") + ": seeds must be non-negative integers");
      }
      cfg.seeds.push_back(static_cast<uint64_t>(s));
    }
    if (cfg.seeds.empty()) throw ConfigError(kv.Where("experiment.seeds") + ": no seeds");
  }
  const std::string arm_name =
      overrides.arm ? *overrides.arm : kv.GetString("experiment.arm", "baseline");
  if (overrides.arm) kv.GetString("experiment.arm", "");
  cfg.arm = ParseArm(arm_name);
  const std::string mode = learner::IdHeadModeName(ArmIdMode(cfg.arm));
  if (kv.Has("train.id_mode") && kv.GetString("train.id_mode") != mode) {
    throw ConfigError(kv.Where("train.id_mode") + ": train.id_mode '" +
                      kv.GetString("train.id_mode") + "' contradicts arm " + arm_name +
                      " (which uses '" + mode + "')");
  }
  if (!kv.Has("train.id_mode")) kv.Set("train.id_mode", mode);
  if (overrides.terrain_level) kv.Set("terrain.level", std::to_string(*overrides.terrain_level));
  cfg.train = learner::TrainConfig::FromConfig(kv);
  cfg.distill = distill::DistillConfig::FromConfig(kv);

  cfg.eval.episodes = static_cast<int>(kv.GetInt("eval.episodes", cfg.eval.episodes));
  if (kv.Has("eval.script")) {
    const std::vector<double> flat = kv.GetDoubleList("eval.script");
    if (flat.size() % 2 != 0) {
      throw ConfigError(kv.Where("eval.script") +
                        ": eval.script needs (duration, velocity) pairs");
    }
    cfg.eval.script.clear();
    for (size_t i = 0; i < flat.size(); i += 2) cfg.eval.script.push_back({flat[i], flat[i + 1]});
  }
  cfg.eval.thresholds = eval::SafetyThresholds::ForTorqueLimit(cfg.train.env.actuator.torque_limit);
  cfg.eval.thresholds.torque = kv.GetDouble("eval.safe_torque", cfg.eval.thresholds.torque);
  cfg.eval.thresholds.torque_rate =
      kv.GetDouble("eval.safe_torque_rate", cfg.eval.thresholds.torque_rate);
  cfg.eval.Validate();
  if (cfg.eval.ScriptSteps() > cfg.train.env.episode_length) {
    throw ConfigError("eval: command script (" + std::to_string(cfg.eval.ScriptSteps()) +
                      " steps) exceeds env.episode_length");
  }

  cfg.actuator_data_steps =
      static_cast<int>(kv.GetInt("actuator_data.steps", cfg.actuator_data_steps));
  if (cfg.actuator_data_steps < 1) throw ConfigError("actuator_data.steps must be >= 1");
  auto& fit = cfg.actuator_fit;
  fit.epochs = static_cast<int>(kv.GetInt("actuator_fit.epochs", fit.epochs));
  fit.batch_size = static_cast<int>(kv.GetInt("actuator_fit.batch_size", fit.batch_size));
  fit.learning_rate =
      static_cast<float>(kv.GetDouble("actuator_fit.learning_rate", fit.learning_rate));
  fit.holdout_fraction = kv.GetDouble("actuator_fit.holdout_fraction", fit.holdout_fraction);
  fit.max_relative_rmse = kv.GetDouble("actuator_fit.max_relative_rmse", fit.max_relative_rmse);
  kv.CheckAllConsumed();
  return cfg;
}

ExperimentConfig LoadExperimentConfigFile(const std::string& path, const Overrides& overrides) {
  return LoadExperimentConfig(KvConfig::Load(path), overrides);
}

std::vector<std::string> ConfigDiff(const nlohmann::json& a, const nlohmann::json& b) {
  std::map<std::string, nlohmann::json> fa, fb;
  Flatten(a, "", fa);
  Flatten(b, "", fb);
  std::vector<std::string> diff;
  for (const auto& [key, value] : fa) {
    auto it = fb.find(key);
    if (it == fb.end() || it->second != value) diff.push_back(key);
  }
  for (const auto& [key, value] : fb) {
    if (!fa.count(key)) diff.push_back(key);
  }
  std::sort(diff.begin(), diff.end());
  return diff;
}

RunSummary SummarizeTrainLog(const std::string& csv_path, uint64_t seed, int window) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot read training log '" + csv_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(csv_path + ": empty training log");
  const std::vector<std::string> header = SplitCsvLine(line);
  std::vector<int> cols(reward::kNumComponents, -1);
  int dyn_col = -1, mse_col = -1;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    for (int k = 0; k < reward::kNumComponents; ++k) {
      if (header[c] == reward::kComponentNames[k]) cols[k] = c;
    }
    if (header[c] == reward::kDynamicsName) dyn_col = c;
    if (header[c] == "dyn_mse") mse_col = c;
  }
  for (int k = 0; k < reward::kNumComponents; ++k) {
    if (cols[k] < 0) {
      throw ConfigError(csv_path + ": missing column '" + reward::kComponentNames[k] + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw ConfigError(csv_path + ": malformed row " + std::to_string(rows.size() + 2));
    }
    std::vector<double> v(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) v[c] = std::stod(cells[c]);
    rows.push_back(std::move(v));
  }
  if (rows.empty()) throw ConfigError(csv_path + ": training log has no rows");
  RunSummary s;
  s.seed = seed;
  s.iterations = static_cast<int>(rows.size());
  const size_t begin = rows.size() > static_cast<size_t>(window) ? rows.size() - window : 0;
  const double count = static_cast<double>(rows.size() - begin);
  for (size_t r = begin; r < rows.size(); ++r) {
    for (int k = 0; k < reward::kNumComponents; ++k) s.components[k] += rows[r][cols[k]] / count;
    if (dyn_col >= 0) s.dynamics += rows[r][dyn_col] / count;
    if (mse_col >= 0) s.dyn_mse += rows[r][mse_col] / count;
  }
  return s;
}

ArmSummary SummarizeArm(Arm arm, const std::vector<RunSummary>& runs,
                        const std::vector<std::string>& config_diff) {
  ArmSummary a;
  a.arm = arm;
  a.runs = runs;
  a.config_diff_vs_baseline = config_diff;
  if (runs.empty()) return a;
  const double n = static_cast<double>(runs.size());
  for (int k = 0; k < reward::kNumComponents; ++k) {
    double mean = 0.0;
    for (const RunSummary& r : runs) mean += r.components[k] / n;
    double var = 0.0;
    for (const RunSummary& r : runs) var += (r.components[k] - mean) * (r.components[k] - mean);
    a.mean[k] = mean;
    a.std[k] = runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  }
  return a;
}

nlohmann::json ArmSummary::ToJson() const {
  nlohmann::json j;
  j["arm"] = ArmName(arm);
  j["window"] = 100;
  nlohmann::json comps;
  for (int k = 0; k < reward::kNumComponents; ++k) {
    comps[reward::kComponentNames[k]] = {{"mean", mean[k]}, {"std", std[k]}};
  }
  j["components"] = comps;
  nlohmann::json rs = nlohmann::json::array();
  for (const RunSummary& r : runs) {
    nlohmann::json c;
    for (int k = 0; k < reward::kNumComponents; ++k) c[reward::kComponentNames[k]] = r.components[k];
    rs.push_back({{"seed", r.seed},
                  {"iterations", r.iterations},
                  {"components", c},
                  {"dynamics", r.dynamics},
                  {"dyn_mse", r.dyn_mse}});
  }
  j["runs"] = rs;
  j["config_diff_vs_baseline"] = config_diff_vs_baseline;
  return j;
}

std::string ArmSummary::ToText() const {
  std::ostringstream s;
  s << "arm " << ArmName(arm) << ": " << runs.size()
    << " seed(s), mean ± std of the final-100-iteration means\n";
  for (int k = 0; k < reward::kNumComponents; ++k) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-22s % .6e ± %.2e\n", reward::kComponentNames[k], mean[k],
                  std[k]);
    s << buf;
  }
  s << "  config differences vs baseline:";
  if (config_diff_vs_baseline.empty()) s << " none";
  for (const std::string& key : config_diff_vs_baseline) s << " " << key;
  s << "\n";
  return s.str();
}

std::string SeedDirName(uint64_t seed) { return "seed_" + std::to_string(seed); }

learner::TrainResult TrainSeed(const ExperimentConfig& cfg, uint64_t seed, const std::string& dir,
                               bool verbose) {
  std::filesystem::create_directories(dir);
  {
    nlohmann::json echo = cfg.Echo();
    echo["seed"] = seed;
    std::ofstream out(std::filesystem::path(dir) / "config.json");
    out << echo.dump(2) << "\n";
  }
  learner::TrainOptions options;
  options.out_dir = dir;
  if (verbose) {
    options.on_iteration = [&cfg](const learner::IterationLog& log) {
      if (log.iteration % 50 == 0 || log.iteration + 1 == cfg.train.iterations) {
        std::fprintf(stderr, "iter %5d  tracking_lin_vel %.5f  dynamics %.5f  std %.3f\n",
                     log.iteration, log.components[0], log.dynamics, log.action_std);
      }
    };
  }
  return learner::TrainTeacher(cfg.train, seed, options);
}

learner::TeacherPolicy LoadVerifiedTeacher(const std::string& path) {
  const nn::Checkpoint ckpt = nn::LoadCheckpoint(path);
  if (ckpt.meta.value("kind", std::string()) != "teacher") {
    throw ConfigError(path + ": not a teacher checkpoint");
  }
  learner::TeacherPolicy policy = learner::TeacherPolicy::FromCheckpoint(ckpt);
  const uint32_t stored = ckpt.meta.at("policy_checksum").get<uint32_t>();
  const uint32_t actual = policy.PolicyChecksum();
  if (stored != actual) {
    std::ostringstream msg;
    msg << path << ": policy checksum mismatch (stored " << std::hex << std::setw(8)
        << std::setfill('0') << stored << ", computed " << std::setw(8) << actual << ")";
    throw ConfigError(msg.str());
  }
  return policy;
}

void CheckCompatible(const learner::TeacherPolicy& policy, const learner::TrainConfig& cfg) {
  const learner::PolicyDims expected =
      learner::PolicyDims::ForModel(cfg.env.model, policy.has_id_head(), policy.dims().latent_dim);
  if (policy.dims().action_dim != expected.action_dim ||
      policy.dims().obs_dim != expected.obs_dim ||
      policy.dims().privileged_dim != expected.privileged_dim) {
    throw ConfigError("checkpoint has " + std::to_string(policy.dims().action_dim) +
                      " joints but the configuration describes " +
                      std::to_string(expected.action_dim));
  }
}

std::vector<eval::TrajectoryLog> RunEvaluation(const learner::TeacherPolicy& teacher,
                                               const distill::StudentPolicy* student,
                                               const ExperimentConfig& cfg, uint64_t seed) {
  cfg.eval.Validate();
  CheckCompatible(teacher, cfg.train);
  const learner::TeacherPolicy deployed = teacher.WithoutIdHead();
  learner::TrainConfig tc = cfg.train;
  tc.num_envs = cfg.eval.episodes;
  tc.env.reward.dynamics_enabled = false;
  tc.env.randomize_initial_episode_step = false;
  tc.env.episode_length = cfg.eval.ScriptSteps();
  auto terrain = std::make_shared<const sim::TerrainConfig>(
      sim::GenerateTerrain(tc.terrain_kind, tc.terrain_level, DeriveSeed(seed, "terrain")));
  std::vector<learner::LocomotionEnv> envs = learner::MakeEnvs(
      tc, DeriveSeed(seed, "eval"), terrain, learner::LoadActuatorNet(tc.env.actuator));
  const int n = deployed.dims().action_dim;

  std::vector<eval::TrajectoryLog> logs;
  for (int e = 0; e < cfg.eval.episodes; ++e) {
    learner::LocomotionEnv& env = envs[e];
    std::optional<distill::StudentPolicy> local;
    if (student) {
      local = *student;
      local->ResetHistory();
    }
    eval::TrajectoryLog log;
    log.n_joints = n;
    for (int t = 0; t < tc.env.episode_length; ++t) {
      env.set_command(sim::Command{cfg.eval.CommandAt(t), 0.0});
      const Eigen::VectorXf obs = env.Observe();
      Eigen::VectorXf action;
      if (local) {
        action = local->Act(obs);
      } else {
        action = deployed.ActionMean(obs, deployed.Latent(env.Privileged())).col(0);
      }
      const Eigen::VectorXd a = action.cast<double>();
      const learner::StepResult r = env.Step(a, nullptr);
      eval::TrajectoryStep s;
      s.time = t * sim::kControlDt;
      s.q = env.state().joint_positions();
      s.qd = env.state().joint_velocities();
      s.target = env.Target(a);
      s.torque = r.applied_torque;
      s.command = env.command().lin_vel;
      s.base_velocity = env.state().ForwardVelocity();
      s.rewards = r.reward.weighted;
      s.dynamics = r.reward.dynamics;
      log.steps.push_back(std::move(s));
      if (r.done()) break;
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

eval::MetricsReport AggregateReports(const std::vector<eval::MetricsReport>& reports) {
  if (reports.empty()) throw ConfigError("no metric reports to aggregate");
  eval::MetricsReport out = reports.front();
  out.values.fill(0.0);
  out.steps = 0;
  const double n = static_cast<double>(reports.size());
  for (const eval::MetricsReport& r : reports) {
    for (int k = 0; k < eval::kNumMetrics; ++k) out.values[k] += r.values[k] / n;
    out.steps += r.steps;
  }
  return out;
}

}  // namespace dynaware::exp
