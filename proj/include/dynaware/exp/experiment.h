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

#ifndef DYNAWARE_EXP_EXPERIMENT_H_
#define DYNAWARE_EXP_EXPERIMENT_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynaware/common/kv_config.h"
#include "dynaware/distill/distiller.h"
#include "dynaware/eval/metrics.h"
#include "dynaware/learner/policy.h"
#include "dynaware/learner/ppo.h"

namespace dynaware::exp {

inline constexpr int kConfigFormatVersion = 1;

enum class Arm { kBaseline, kDynNoAux, kDynAux };
inline constexpr std::array<Arm, 3> kAllArms = {Arm::kBaseline, Arm::kDynNoAux, Arm::kDynAux};

Arm ParseArm(const std::string& name);
const char* ArmName(Arm arm);
learner::IdHeadMode ArmIdMode(Arm arm);

struct CommandSegment {
  double duration = 0.0;  // s
  double lin_vel = 0.0;   // m/s
};

struct EvalConfig {
  int episodes = 2;
  std::vector<CommandSegment> script = DefaultScript();
  eval::SafetyThresholds thresholds;

  // 2 s at 0.3, 6 s at 0.6, 6 s at -0.6, 6 s at 0.6 m/s.
  static std::vector<CommandSegment> DefaultScript();
  int ScriptSteps() const;
  // Commanded velocity for control step `step`.
  double CommandAt(int step) const;
  void Validate() const;
};

struct ExperimentConfig {
  int format_version = kConfigFormatVersion;
  std::string name;
  std::vector<uint64_t> seeds = {1, 2, 3};
  Arm arm = Arm::kBaseline;
  learner::TrainConfig train;
  distill::DistillConfig distill;
  EvalConfig eval;
  int actuator_data_steps = 20000;
  actuator::ActuatorFitConfig actuator_fit;

  nlohmann::json Echo() const;
};

struct Overrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> arm;
  std::optional<int> terrain_level;
};

// Parses and validates an experiment configuration. Requires
// "experiment.format_version" and "experiment.name"; rejects unknown keys.
// The arm fixes the ID-head mode and the default (α_dyn, w_dyn).
ExperimentConfig LoadExperimentConfig(KvConfig kv, const Overrides& overrides = {});
ExperimentConfig LoadExperimentConfigFile(const std::string& path,
                                          const Overrides& overrides = {});

// Keys whose value differs between the two echoes, flattened with '.'.
std::vector<std::string> ConfigDiff(const nlohmann::json& a, const nlohmann::json& b);

// Mean of each logged reward component over the final `window` iterations.
struct RunSummary {
  uint64_t seed = 0;
  int iterations = 0;
  std::array<double, reward::kNumComponents> components{};
  double dynamics = 0.0;
  double dyn_mse = 0.0;
};
RunSummary SummarizeTrainLog(const std::string& csv_path, uint64_t seed, int window = 100);

struct ArmSummary {
  Arm arm = Arm::kBaseline;
  std::vector<RunSummary> runs;
  std::array<double, reward::kNumComponents> mean{};
  std::array<double, reward::kNumComponents> std{};
  std::vector<std::string> config_diff_vs_baseline;
  nlohmann::json ToJson() const;
  std::string ToText() const;
};
ArmSummary SummarizeArm(Arm arm, const std::vector<RunSummary>& runs,
                        const std::vector<std::string>& config_diff);

std::string SeedDirName(uint64_t seed);

// Trains one seed into `dir` (train_log.csv, checkpoints/, teacher.ckpt,
// config.json).
learner::TrainResult TrainSeed(const ExperimentConfig& cfg, uint64_t seed, const std::string& dir,
                               bool verbose);

// Loads a teacher checkpoint and checks its stored policy checksum; throws
// ConfigError naming both checksums on mismatch.
learner::TeacherPolicy LoadVerifiedTeacher(const std::string& path);

// Refuses a checkpoint whose dimensions do not match the configured robot.
void CheckCompatible(const learner::TeacherPolicy& policy, const learner::TrainConfig& cfg);

// Rolls out the deployed policy (teacher with the ID head removed, or the
// student when given) along the command script.
std::vector<eval::TrajectoryLog> RunEvaluation(const learner::TeacherPolicy& teacher,
                                               const distill::StudentPolicy* student,
                                               const ExperimentConfig& cfg, uint64_t seed);

// Mean of per-episode metric reports.
eval::MetricsReport AggregateReports(const std::vector<eval::MetricsReport>& reports);

}  // namespace dynaware::exp

#endif  // DYNAWARE_EXP_EXPERIMENT_H_
