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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynaware/actuator/actuator.h"
#include "dynaware/common/error.h"
#include "dynaware/distill/distiller.h"
#include "dynaware/eval/metrics.h"
#include "dynaware/exp/experiment.h"
#include "dynaware/nn/checkpoint.h"

namespace fs = std::filesystem;
using namespace dynaware;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> arm;
  std::optional<int> terrain_level;
  std::string out;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& f, const std::string& default_out) {
  cmd->add_option("--config", f.config, "experiment configuration file")->required();
  cmd->add_option("--seed", f.seed, "run a single seed instead of experiment.seeds");
  cmd->add_option("--arm", f.arm, "baseline | dyn_no_aux | dyn_aux");
  cmd->add_option("--terrain-level", f.terrain_level, "terrain difficulty level");
  f.out = default_out;
  cmd->add_option("--out", f.out, "output location")->capture_default_str();
}

exp::ExperimentConfig LoadConfig(const CommonFlags& f) {
  exp::Overrides o;
  o.seed = f.seed;
  o.arm = f.arm;
  o.terrain_level = f.terrain_level;
  return exp::LoadExperimentConfigFile(f.config, o);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

nlohmann::json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  return nlohmann::json::parse(in);
}

uint64_t FirstSeed(const exp::ExperimentConfig& cfg) { return cfg.seeds.front(); }

// Aggregates every finished seed directory below out/<arm>.
void WriteArmSummary(const fs::path& arm_dir, const fs::path& out_root, exp::Arm arm) {
  std::vector<exp::RunSummary> runs;
  nlohmann::json arm_echo;
  for (const auto& entry : fs::directory_iterator(arm_dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("seed_", 0) != 0) continue;
    const fs::path log = entry.path() / "train_log.csv";
    if (!fs::exists(log) || !fs::exists(entry.path() / "teacher.ckpt")) continue;
    runs.push_back(exp::SummarizeTrainLog(log.string(), std::stoull(name.substr(5))));
    if (arm_echo.is_null() && fs::exists(entry.path() / "config.json")) {
      arm_echo = ReadJson(entry.path() / "config.json");
    }
  }
  std::sort(runs.begin(), runs.end(),
            [](const exp::RunSummary& a, const exp::RunSummary& b) { return a.seed < b.seed; });

  std::vector<std::string> diff;
  bool have_baseline = false;
  const fs::path baseline_dir = out_root / exp::ArmName(exp::Arm::kBaseline);
  if (fs::exists(baseline_dir) && !arm_echo.is_null()) {
    for (const auto& entry : fs::directory_iterator(baseline_dir)) {
      const fs::path cfg = entry.path() / "config.json";
      if (!fs::exists(cfg)) continue;
      nlohmann::json base = ReadJson(cfg);
      nlohmann::json mine = arm_echo;
      base.erase("seed");
      base.erase("seeds");
      mine.erase("seed");
      mine.erase("seeds");
      diff = exp::ConfigDiff(base, mine);
      have_baseline = true;
      break;
    }
  }
  const exp::ArmSummary summary = exp::SummarizeArm(arm, runs, diff);
  nlohmann::json j = summary.ToJson();
  j["baseline_found"] = have_baseline;
  WriteText(arm_dir / "summary.json", j.dump(2) + "\n");
  std::string text = summary.ToText();
  if (!have_baseline && arm != exp::Arm::kBaseline) text += "  (no baseline run found to diff against)\n";
  WriteText(arm_dir / "summary.txt", text);
  std::cout << text;
}

int RunTrain(const CommonFlags& f, bool quiet) {
  const exp::ExperimentConfig cfg = LoadConfig(f);
  const fs::path arm_dir = fs::path(f.out) / exp::ArmName(cfg.arm);
  for (uint64_t seed : cfg.seeds) {
    const fs::path dir = arm_dir / exp::SeedDirName(seed);
    std::fprintf(stderr, "training %s seed %llu -> %s\n", exp::ArmName(cfg.arm),
                 static_cast<unsigned long long>(seed), dir.c_str());
    const auto start = std::chrono::steady_clock::now();
    exp::TrainSeed(cfg, seed, dir.string(), !quiet);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const nlohmann::json info = {{"wall_seconds", seconds},
                                 {"iterations", cfg.train.iterations},
                                 {"num_envs", cfg.train.num_envs}};
    WriteText(dir / "run_info.json", info.dump(2) + "\n");
  }
  WriteArmSummary(arm_dir, f.out, cfg.arm);
  return 0;
}

int RunDistill(const CommonFlags& f, const std::string& teacher_path) {
  const exp::ExperimentConfig cfg = LoadConfig(f);
  const learner::TeacherPolicy teacher = exp::LoadVerifiedTeacher(teacher_path);
  exp::CheckCompatible(teacher, cfg.train);
  const uint64_t seed = FirstSeed(cfg);
  fs::path out = f.out.empty() ? fs::path(teacher_path).parent_path() / "student" : fs::path(f.out);
  fs::create_directories(out);
  distill::DistillOptions options;
  options.out_dir = out.string();
  options.on_iteration = [&cfg](const distill::DistillIterationLog& log) {
    if (log.iteration % 50 == 0 || log.iteration + 1 == cfg.distill.iterations) {
      std::fprintf(stderr, "distill %4d  action %.3e  latent %.3e\n", log.iteration,
                   log.loss.action, log.loss.latent);
    }
  };
  const distill::DistillResult result = distill::Distill(teacher, cfg.train, cfg.distill, seed, options);
  const distill::ActionGapReport gap = distill::EvaluateActionGap(
      result.student, teacher, cfg.train, cfg.distill.eval_episodes, seed);
  const nlohmann::json j = {{"episodes", gap.episodes},
                            {"steps", gap.steps},
                            {"rms_rad", gap.rms_rad},
                            {"max_rad", gap.max_rad},
                            {"threshold_rad", cfg.distill.action_gap_threshold},
                            {"teacher_unchanged", gap.teacher_unchanged},
                            {"teacher_checksum", result.student.TeacherChecksum()}};
  WriteText(out / "action_gap.json", j.dump(2) + "\n");
  std::printf("action gap RMS %.4f rad over %d steps (threshold %.3f), teacher unchanged: %s\n",
              gap.rms_rad, gap.steps, cfg.distill.action_gap_threshold,
              gap.teacher_unchanged ? "yes" : "no");
  return gap.teacher_unchanged ? 0 : 1;
}

int RunEval(const CommonFlags& f, const std::string& checkpoint, const std::string& student_path) {
  const exp::ExperimentConfig cfg = LoadConfig(f);
  const learner::TeacherPolicy teacher = exp::LoadVerifiedTeacher(checkpoint);
  std::optional<distill::StudentPolicy> student;
  if (!student_path.empty()) {
    student = distill::StudentPolicy::FromCheckpoint(nn::LoadCheckpoint(student_path), teacher);
  }
  const uint64_t seed = FirstSeed(cfg);
  const std::vector<eval::TrajectoryLog> logs =
      exp::RunEvaluation(teacher, student ? &*student : nullptr, cfg, seed);
  const fs::path out(f.out);
  fs::create_directories(out);
  std::vector<eval::MetricsReport> reports;
  for (size_t e = 0; e < logs.size(); ++e) {
    const std::string tag = std::to_string(e);
    eval::WriteTrajectoryCsv((out / ("trajectory_" + tag + ".csv")).string(), logs[e]);
    eval::WritePlotCsv((out / ("plot_" + tag + ".csv")).string(), logs[e]);
    eval::MetricsReport r = eval::ComputeMetrics(logs[e], cfg.eval.thresholds);
    r.meta = {{"episode", e}};
    eval::WriteMetricsJson((out / ("metrics_episode_" + tag + ".json")).string(), r);
    reports.push_back(std::move(r));
  }
  eval::MetricsReport agg = exp::AggregateReports(reports);
  agg.meta = {{"checkpoint", checkpoint},
              {"student", student_path},
              {"policy", student ? "student" : "teacher"},
              {"episodes", logs.size()},
              {"seed", seed},
              {"arm", exp::ArmName(cfg.arm)},
              {"terrain_level", cfg.train.terrain_level}};
  eval::WriteMetricsJson((out / "metrics.json").string(), agg);
  for (int k = 0; k < eval::kNumMetrics; ++k) {
    const eval::MetricInfo info = eval::GetMetricInfo(static_cast<eval::Metric>(k));
    std::printf("%-28s %12.5g %s\n", info.label, agg.values[k], info.unit);
  }
  return 0;
}

int RunCompare(const std::vector<std::string>& paths, std::vector<std::string> names) {
  if (paths.size() < 2) throw UsageError("compare needs at least two metrics reports");
  if (!names.empty() && names.size() != paths.size()) {
    throw UsageError("--names must list one name per report");
  }
  std::vector<eval::MetricsReport> reports;
  for (const std::string& p : paths) reports.push_back(eval::ReadMetricsJson(p));
  if (names.empty()) names = paths;
  if (reports.size() == 2) {
    std::cout << eval::CompareReports(reports[0], reports[1]).ToText(names[0], names[1]) << "\n";
  }
  std::cout << eval::CompareManyText(names, reports);
  return 0;
}

int RunGenActuatorData(const CommonFlags& f) {
  const exp::ExperimentConfig cfg = LoadConfig(f);
  const actuator::ActuatorDataset data =
      actuator::GenerateActuatorDataset(cfg.train.env.model, cfg.train.env.actuator,
                                        cfg.actuator_data_steps, FirstSeed(cfg));
  if (fs::path(f.out).has_parent_path()) fs::create_directories(fs::path(f.out).parent_path());
  data.WriteCsv(f.out);
  std::printf("wrote %d samples to %s\n", data.size(), f.out.c_str());
  return 0;
}

int RunFitActuator(const CommonFlags& f, const std::string& data_path) {
  const exp::ExperimentConfig cfg = LoadConfig(f);
  const actuator::ActuatorDataset data = actuator::ActuatorDataset::ReadCsv(data_path);
  actuator::ActuatorFitReport report;
  const actuator::ActuatorNet net = actuator::FitActuatorNet(
      data, cfg.train.env.actuator.torque_limit, cfg.actuator_fit, FirstSeed(cfg), &report);
  if (fs::path(f.out).has_parent_path()) fs::create_directories(fs::path(f.out).parent_path());
  nn::SaveCheckpoint(f.out, net.ToCheckpoint());
  std::printf("held-out RMSE %.4f N·m (torque RMS %.4f N·m, %d samples); saved %s\n",
              report.holdout_rmse, report.holdout_torque_rms, report.holdout_samples,
              f.out.c_str());
  if (!report.meets_threshold) {
    std::fprintf(stderr, "error: held-out RMSE exceeds %.0f%% of the torque RMS\n",
                 100.0 * cfg.actuator_fit.max_relative_rmse);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamics-aware locomotion experiments"};
  app.require_subcommand(1);

  CommonFlags train_f, distill_f, eval_f, gen_f, fit_f;
  bool quiet = false;
  CLI::App* train = app.add_subcommand("train", "train teachers for one arm");
  AddCommonFlags(train, train_f, "results");
  train->add_flag("--quiet", quiet, "no per-iteration progress");

  std::string teacher_path;
  CLI::App* distill_cmd = app.add_subcommand("distill", "distill a student from a teacher");
  AddCommonFlags(distill_cmd, distill_f, "");
  distill_cmd->add_option("--teacher", teacher_path, "teacher checkpoint")->required();

  std::string checkpoint, student_path;
  CLI::App* eval_cmd = app.add_subcommand("eval", "scripted-command evaluation and metrics");
  AddCommonFlags(eval_cmd, eval_f, "eval_out");
  eval_cmd->add_option("--checkpoint", checkpoint, "teacher checkpoint")->required();
  eval_cmd->add_option("--student", student_path, "student checkpoint (deploys the student)");

  std::vector<std::string> reports, names;
  CLI::App* compare = app.add_subcommand("compare", "compare metrics reports");
  compare->add_option("reports", reports, "metrics.json files")->required();
  compare->add_option("--names", names, "display names, one per report");

  CLI::App* gen = app.add_subcommand("gen-actuator-data", "generate an actuator dataset");
  AddCommonFlags(gen, gen_f, "actuator_data.csv");

  std::string data_path;
  CLI::App* fit = app.add_subcommand("fit-actuator", "fit the actuator network");
  AddCommonFlags(fit, fit_f, "actuator_net.ckpt");
  fit->add_option("--data", data_path, "dataset CSV")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed()) return RunTrain(train_f, quiet);
    if (distill_cmd->parsed()) return RunDistill(distill_f, teacher_path);
    if (eval_cmd->parsed()) return RunEval(eval_f, checkpoint, student_path);
    if (compare->parsed()) return RunCompare(reports, names);
    if (gen->parsed()) return RunGenActuatorData(gen_f);
    if (fit->parsed()) return RunFitActuator(fit_f, data_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
