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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"
#include "dynaware/exp/experiment.h"
#include "dynaware/learner/ppo.h"
#include "dynaware/nn/checkpoint.h"

namespace dynaware::exp {
namespace {

namespace fs = std::filesystem;

constexpr char kMinimal[] = R"(
[experiment]
format_version = 1
name = unit
seeds = 4, 5
arm = baseline

[train]
num_envs = 4
horizon = 8
iterations = 2

[eval]
episodes = 1
script = 0.5, 0.6, 0.5, -0.6
)";

Overrides ArmOverride(const std::string& arm) {
  Overrides o;
  o.arm = arm;
  return o;
}

ExperimentConfig Parse(const std::string& text, const Overrides& o = {}) {
  return LoadExperimentConfig(KvConfig::Parse(text, "unit.cfg"), o);
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dynaware_exp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ErrorOf(const std::string& text, const Overrides& o = {}) {
  try {
    Parse(text, o);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ExperimentConfigTest, ParsesFields) {
  const ExperimentConfig cfg = Parse(kMinimal);
  EXPECT_EQ(cfg.name, "unit");
  EXPECT_EQ(cfg.seeds, (std::vector<uint64_t>{4, 5}));
  EXPECT_EQ(cfg.arm, Arm::kBaseline);
  EXPECT_EQ(cfg.train.num_envs, 4);
  EXPECT_EQ(cfg.train.id_mode, learner::IdHeadMode::kOff);
  ASSERT_EQ(cfg.eval.script.size(), 2u);
  EXPECT_DOUBLE_EQ(cfg.eval.script[1].lin_vel, -0.6);
  EXPECT_EQ(cfg.eval.ScriptSteps(), 50);
  EXPECT_DOUBLE_EQ(cfg.eval.thresholds.torque, 0.9 * cfg.train.env.actuator.torque_limit);
  EXPECT_DOUBLE_EQ(cfg.eval.thresholds.torque_rate, 150.0);
}

TEST(ExperimentConfigTest, MissingRequiredFieldIsNamed) {
  std::string text = kMinimal;
  text.replace(text.find("name = unit"), 11, "");
  const std::string err = ErrorOf(text);
  EXPECT_NE(err.find("experiment.name"), std::string::npos) << err;
  EXPECT_NE(err.find("missing required field"), std::string::npos) << err;
}

TEST(ExperimentConfigTest, UnknownKeyIsRejectedWithLine) {
  const std::string err = ErrorOf(std::string(kMinimal) + "[train]\nlearning_rat = 1e-3\n");
  EXPECT_NE(err.find("learning_rat"), std::string::npos) << err;
  EXPECT_NE(err.find("unit.cfg:"), std::string::npos) << err;
}

TEST(ExperimentConfigTest, RejectsUnsupportedFormatVersion) {
  std::string text = kMinimal;
  text.replace(text.find("format_version = 1"), 18, "format_version = 2");
  EXPECT_NE(ErrorOf(text).find("format_version"), std::string::npos);
}

TEST(ExperimentConfigTest, ArmEchoShowsCoefficients) {
  const nlohmann::json aux = Parse(kMinimal, ArmOverride("dyn_aux")).Echo();
  EXPECT_EQ(aux["arm"], "dyn_aux");
  EXPECT_EQ(aux["train"]["id_mode"], "reward_plus_aux");
  EXPECT_DOUBLE_EQ(aux["train"]["alpha_dyn"].get<double>(), 3e-4);
  EXPECT_DOUBLE_EQ(aux["train"]["w_dyn"].get<double>(), -1e-2);

  const nlohmann::json no_aux = Parse(kMinimal, ArmOverride("dyn_no_aux")).Echo();
  EXPECT_EQ(no_aux["train"]["id_mode"], "reward_only");
  EXPECT_DOUBLE_EQ(no_aux["train"]["alpha_dyn"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(no_aux["train"]["w_dyn"].get<double>(), -5e-4);

  const nlohmann::json base = Parse(kMinimal).Echo();
  EXPECT_TRUE(base["train"]["alpha_dyn"].is_null());
  EXPECT_DOUBLE_EQ(base["train"]["w_dyn"].get<double>(), 0.0);
}

TEST(ExperimentConfigTest, ArmsDifferOnlyInDynamicsSettings) {
  const nlohmann::json base = Parse(kMinimal).Echo();
  for (const char* arm : {"dyn_no_aux", "dyn_aux"}) {
    const std::vector<std::string> diff =
        ConfigDiff(base, Parse(kMinimal, ArmOverride(arm)).Echo());
    EXPECT_EQ(diff, (std::vector<std::string>{"arm", "train.alpha_dyn", "train.id_mode",
                                              "train.w_dyn"}))
        << arm;
  }
}

TEST(ExperimentConfigTest, ContradictoryIdModeIsRejected) {
  const std::string err = ErrorOf(std::string(kMinimal) + "[train]\nid_mode = reward_only\n");
  EXPECT_NE(err.find("contradicts arm"), std::string::npos) << err;
}

TEST(ExperimentConfigTest, UnknownArmIsRejected) {
  EXPECT_NE(ErrorOf(kMinimal, ArmOverride("dyn")).find("unknown arm"), std::string::npos);
}

TEST(ExperimentConfigTest, OverridesApply) {
  const ExperimentConfig cfg = Parse(kMinimal, Overrides{9, "dyn_aux", 3});
  EXPECT_EQ(cfg.seeds, (std::vector<uint64_t>{9}));
  EXPECT_EQ(cfg.arm, Arm::kDynAux);
  EXPECT_EQ(cfg.train.terrain_level, 3);
  EXPECT_NE(ErrorOf(kMinimal, Overrides{std::nullopt, std::nullopt, 12}), "");
}

TEST(EvalScriptTest, EmptyScriptIsAnError) {
  std::string text = kMinimal;
  text.replace(text.find("script = 0.5, 0.6, 0.5, -0.6"), 29, "script =");
  EXPECT_NE(ErrorOf(text).find("empty"), std::string::npos) << ErrorOf(text);
  EvalConfig eval;
  eval.script.clear();
  EXPECT_THROW(eval.Validate(), ConfigError);
}

TEST(EvalScriptTest, DefaultScriptContainsReversal) {
  const EvalConfig eval;
  bool reversal = false;
  for (int t = 1; t < eval.ScriptSteps(); ++t) {
    if (eval.CommandAt(t - 1) == 0.6 && eval.CommandAt(t) == -0.6) reversal = true;
  }
  EXPECT_TRUE(reversal);
  EXPECT_EQ(eval.ScriptSteps(), 1000);
  EXPECT_DOUBLE_EQ(eval.CommandAt(0), 0.3);
  EXPECT_DOUBLE_EQ(eval.CommandAt(99), 0.3);
  EXPECT_DOUBLE_EQ(eval.CommandAt(100), 0.6);
  EXPECT_DOUBLE_EQ(eval.CommandAt(999), 0.6);
}

TEST(SummaryTest, AveragesFinalWindow) {
  const fs::path dir = TempDir("summary");
  const fs::path csv = dir / "train_log.csv";
  {
    std::ofstream out(csv);
    out << learner::TrainingLogHeader(true) << "\n";
    for (int i = 0; i < 150; ++i) {
      learner::IterationLog log;
      log.iteration = i;
      for (int k = 0; k < reward::kNumComponents; ++k) log.components[k] = i + k;
      log.dynamics = -i;
      out << learner::TrainingLogRow(log, true) << "\n";
    }
  }
  const RunSummary s = SummarizeTrainLog(csv.string(), 7);
  EXPECT_EQ(s.iterations, 150);
  // Mean of 50..149 is 99.5.
  EXPECT_NEAR(s.components[0], 99.5, 1e-9);
  EXPECT_NEAR(s.components[3], 102.5, 1e-9);
  EXPECT_NEAR(s.dynamics, -99.5, 1e-9);

  RunSummary other = s;
  other.components[0] = 101.5;
  const ArmSummary arm = SummarizeArm(Arm::kDynAux, {s, other}, {"train.w_dyn"});
  EXPECT_NEAR(arm.mean[0], 100.5, 1e-12);
  EXPECT_NEAR(arm.std[0], std::sqrt(2.0), 1e-12);
  EXPECT_EQ(arm.ToJson()["runs"].size(), 2u);
  EXPECT_NE(arm.ToText().find("train.w_dyn"), std::string::npos);
}

TEST(SummaryTest, MissingColumnIsReported) {
  const fs::path csv = TempDir("bad_summary") / "train_log.csv";
  std::ofstream(csv) << "iteration,foo\n0,1\n";
  EXPECT_THROW(SummarizeTrainLog(csv.string(), 1), ConfigError);
}

class CheckpointFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_ = Parse(kMinimal);
    model_.Build(cfg_.train, 11);
    dir_ = TempDir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    path_ = (dir_ / "teacher.ckpt").string();
    nn::SaveCheckpoint(path_, learner::TeacherCheckpoint(model_, cfg_.train, 11, 0));
  }

  ExperimentConfig cfg_;
  learner::TeacherModel model_;
  fs::path dir_;
  std::string path_;
};

TEST_F(CheckpointFixture, VerifiedLoadRoundTrips) {
  const learner::TeacherPolicy p = LoadVerifiedTeacher(path_);
  EXPECT_EQ(p.PolicyChecksum(), model_.policy.PolicyChecksum());
}

TEST_F(CheckpointFixture, TamperedWeightsAreRefusedWithChecksumDiff) {
  nn::Checkpoint ckpt = nn::LoadCheckpoint(path_);
  for (nn::NamedTensor& t : ckpt.tensors) t.value(0, 0) += 1.0f;
  nn::SaveCheckpoint(path_, ckpt);
  try {
    LoadVerifiedTeacher(path_);
    FAIL() << "tampered checkpoint accepted";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("stored"), std::string::npos) << msg;
    EXPECT_NE(msg.find("computed"), std::string::npos) << msg;
  }
}

TEST_F(CheckpointFixture, CorruptedBytesAreRefused) {
  std::string bytes;
  {
    std::ifstream in(path_, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  bytes[bytes.size() / 2] ^= 0x5a;
  std::ofstream(path_, std::ios::binary) << bytes;
  EXPECT_THROW(LoadVerifiedTeacher(path_), ConfigError);
}

TEST_F(CheckpointFixture, JointCountMismatchIsRefused) {
  ExperimentConfig other = Parse(std::string(kMinimal) + "[model]\nn_joints = 4\n");
  EXPECT_THROW(CheckCompatible(model_.policy, other.train), ConfigError);
  EXPECT_THROW(RunEvaluation(model_.policy, nullptr, other, 1), ConfigError);
  EXPECT_NO_THROW(CheckCompatible(model_.policy, cfg_.train));
}

TEST_F(CheckpointFixture, EvaluationIsDeterministic) {
  const std::vector<eval::TrajectoryLog> a = RunEvaluation(model_.policy, nullptr, cfg_, 3);
  const std::vector<eval::TrajectoryLog> b = RunEvaluation(model_.policy, nullptr, cfg_, 3);
  ASSERT_EQ(a.size(), 1u);
  ASSERT_GE(a[0].steps.size(), 3u);
  EXPECT_DOUBLE_EQ(a[0].steps[0].command, 0.6);
  const eval::MetricsReport ra = eval::ComputeMetrics(a[0], cfg_.eval.thresholds);
  const eval::MetricsReport rb = eval::ComputeMetrics(b[0], cfg_.eval.thresholds);
  EXPECT_EQ(ra.ToJson().dump(), rb.ToJson().dump());
}

TEST_F(CheckpointFixture, StudentEvaluationRuns) {
  const distill::StudentPolicy student(model_.policy);
  const std::vector<eval::TrajectoryLog> logs = RunEvaluation(model_.policy, &student, cfg_, 3);
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_GE(logs[0].steps.size(), 3u);
}

TEST(AggregateTest, AveragesEpisodeReports) {
  eval::MetricsReport a, b;
  a.n_joints = b.n_joints = 8;
  a.steps = 10;
  b.steps = 20;
  a.values.fill(1.0);
  b.values.fill(3.0);
  const eval::MetricsReport m = AggregateReports({a, b});
  EXPECT_EQ(m.steps, 30);
  for (double v : m.values) EXPECT_DOUBLE_EQ(v, 2.0);
  EXPECT_THROW(AggregateReports({}), ConfigError);
}

}  // namespace
}  // namespace dynaware::exp
