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
#include <vector>

#include <gtest/gtest.h>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"
#include "dynaware/common/rng.h"
#include "dynaware/learner/env.h"
#include "dynaware/learner/policy.h"
#include "dynaware/learner/ppo.h"
#include "dynaware/nn/checkpoint.h"
#include "tests/support/deployment_check.h"
#include "tests/support/gae_oracle.h"

namespace dynaware::learner {
namespace {

using testsupport::GaeOracle;

TEST(ComputeGaeTest, MatchesSummationOracleOnRandomInstances) {
  const testsupport::GaeSuiteResult r = testsupport::RunGaeOracleSuite(100, 2024);
  EXPECT_EQ(r.instances, 100);
  EXPECT_LE(r.max_length, 64);
  EXPECT_LT(r.worst_error, 1e-6);
}

TEST(ComputeGaeTest, SingleDoneStep) {
  std::vector<float> r{2.5f}, v{0.75f}, d{1.0f}, a(1), ret(1);
  ComputeGae(r, v, d, 100.0f, 0.99, 0.95, a, ret);
  EXPECT_FLOAT_EQ(a[0], 1.75f);
  EXPECT_FLOAT_EQ(ret[0], 2.5f);
}

TEST(ComputeGaeTest, ThreeStepExample) {
  std::vector<float> r{1, 1, 1}, v{0, 0, 0}, d{0, 0, 0}, a(3), ret(3);
  ComputeGae(r, v, d, 0.0f, 0.9, 0.95, a, ret);
  EXPECT_NEAR(a[0], 2.586025, 1e-6);
}

TEST(ComputeGaeTest, ZeroLambdaGivesTemporalDifference) {
  std::vector<float> r{0.5f, -1.0f, 2.0f}, v{0.1f, 0.2f, -0.3f}, d{0, 1, 0}, a(3), ret(3);
  ComputeGae(r, v, d, 0.4f, 0.9, 0.0, a, ret);
  EXPECT_FLOAT_EQ(a[0], 0.5f + 0.9f * 0.2f - 0.1f);
  EXPECT_FLOAT_EQ(a[1], -1.0f - 0.2f);
  EXPECT_FLOAT_EQ(a[2], 2.0f + 0.9f * 0.4f + 0.3f);
}

TEST(ComputeGaeTest, LengthMismatchThrows) {
  std::vector<float> r(3), v(2), d(3), a(3), ret(3);
  EXPECT_THROW(ComputeGae(r, v, d, 0.0f, 0.9, 0.9, a, ret), ConfigError);
}

TEST(ComputeGaeTest, BufferLayoutIsPerEnvironment) {
  RolloutBuffer b;
  b.horizon = 5;
  b.num_envs = 3;
  Rng rng(7);
  b.rewards.resize(15);
  b.values.resize(15);
  b.dones.resize(15);
  b.advantages.resize(15);
  b.returns.resize(15);
  b.last_values.resize(3);
  for (int i = 0; i < 15; ++i) {
    b.rewards[i] = static_cast<float>(rng.Uniform(-1.0, 1.0));
    b.values[i] = static_cast<float>(rng.Uniform(-1.0, 1.0));
    b.dones[i] = i == 7 ? 1.0f : 0.0f;
  }
  for (int e = 0; e < 3; ++e) b.last_values[e] = static_cast<float>(e);
  ComputeGae(b, 0.95, 0.9);
  for (int e = 0; e < 3; ++e) {
    std::vector<float> r(5), v(5), d(5);
    for (int t = 0; t < 5; ++t) {
      r[t] = b.rewards[t * 3 + e];
      v[t] = b.values[t * 3 + e];
      d[t] = b.dones[t * 3 + e];
    }
    std::vector<long double> oracle;
    GaeOracle(r, v, d, b.last_values[e], 0.95, 0.9, oracle);
    for (int t = 0; t < 5; ++t) {
      EXPECT_NEAR(b.advantages[t * 3 + e], static_cast<double>(oracle[t]), 1e-6);
    }
  }
}

TEST(NormalizeAdvantagesTest, ZeroMeanUnitStd) {
  Rng rng(11);
  Eigen::VectorXf adv(3072);
  for (Eigen::Index i = 0; i < adv.size(); ++i) {
    adv[i] = static_cast<float>(5.0 + 3.0 * rng.Normal());
  }
  NormalizeAdvantages(adv);
  const double mean = adv.cast<double>().mean();
  const double std = std::sqrt((adv.cast<double>().array() - mean).square().mean());
  EXPECT_LT(std::fabs(mean), 1e-6);
  EXPECT_NEAR(std, 1.0, 1e-3);
}

TEST(NormalizeAdvantagesTest, AllZeroStaysZero) {
  Eigen::VectorXf adv = Eigen::VectorXf::Zero(16);
  NormalizeAdvantages(adv);
  EXPECT_EQ(adv.squaredNorm(), 0.0f);
}

TrainConfig SmallConfig(IdHeadMode mode) {
  TrainConfig cfg;
  cfg.num_envs = 4;
  cfg.horizon = 8;
  cfg.epochs = 1;
  cfg.minibatches = 1;
  cfg.iterations = 2;
  cfg.id_mode = mode;
  cfg.ApplyModeDefaults();
  cfg.Finalize();
  return cfg;
}

struct Harness {
  explicit Harness(const TrainConfig& c, uint64_t seed = 5) : cfg(c) {
    model.Build(cfg, seed);
    terrain = std::make_shared<const sim::TerrainConfig>(
        sim::GenerateTerrain(cfg.terrain_kind, cfg.terrain_level, DeriveSeed(seed, "terrain")));
    envs = MakeEnvs(cfg, seed, terrain, nullptr);
    noise = MakeNoiseStreams(cfg.num_envs, seed);
  }
  EpisodeStats Collect(bool deterministic = false) {
    RolloutCollector collector(&envs, &noise);
    EpisodeStats s = collector.Collect(model.policy, model.critic, cfg, buffer, deterministic);
    ComputeGae(buffer, cfg.gamma, cfg.lambda);
    return s;
  }

  TrainConfig cfg;
  TeacherModel model;
  std::shared_ptr<const sim::TerrainConfig> terrain;
  std::vector<LocomotionEnv> envs;
  std::vector<Rng> noise;
  RolloutBuffer buffer;
};

std::vector<nn::Matrix> Snapshot(TeacherModel& model, const std::string& prefix) {
  std::vector<nn::Matrix> out;
  for (nn::Parameter* p : model.TrainableParameters()) {
    if (p->name.rfind(prefix, 0) == 0) out.push_back(p->value);
  }
  return out;
}

bool SameValues(const std::vector<nn::Matrix>& a, const std::vector<nn::Matrix>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
    if (!(a[i].array() == b[i].array()).all()) return false;
  }
  return true;
}

TEST(CollectRolloutsTest, SingleStepSingleEnvPopulatesEveryField) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  cfg.num_envs = 1;
  cfg.horizon = 1;
  Harness h(cfg);
  h.Collect();
  const RolloutBuffer& b = h.buffer;
  EXPECT_EQ(b.size(), 1);
  EXPECT_EQ(b.obs.cols(), 1);
  EXPECT_EQ(b.privileged.cols(), 1);
  EXPECT_EQ(b.actions.cols(), 1);
  EXPECT_EQ(b.applied_torque.cols(), 1);
  EXPECT_EQ(b.predicted_torque.cols(), 1);
  EXPECT_EQ(b.log_probs.size(), 1);
  EXPECT_EQ(b.last_values.size(), 1);
  EXPECT_TRUE(b.obs.allFinite());
  EXPECT_TRUE(b.applied_torque.allFinite());
  EXPECT_TRUE(b.predicted_torque.allFinite());
  EXPECT_LT(b.components(reward::kNumComponents, 0), 0.0f);
}

TEST(CollectRolloutsTest, DeterministicModeIsReproducible) {
  const TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  Harness a(cfg), b(cfg);
  a.Collect(true);
  b.Collect(true);
  EXPECT_TRUE((a.buffer.obs.array() == b.buffer.obs.array()).all());
  EXPECT_TRUE((a.buffer.actions.array() == b.buffer.actions.array()).all());
  EXPECT_TRUE((a.buffer.rewards.array() == b.buffer.rewards.array()).all());
  EXPECT_TRUE((a.buffer.applied_torque.array() == b.buffer.applied_torque.array()).all());
}

TEST(CollectRolloutsTest, IdHeadOffHasNoPredictionAndZeroDynamicsReward) {
  Harness h(SmallConfig(IdHeadMode::kOff));
  h.Collect();
  EXPECT_EQ(h.buffer.predicted_torque.size(), 0);
  EXPECT_TRUE((h.buffer.components.row(reward::kNumComponents).array() == 0.0f).all());
}

TEST(CollectRolloutsTest, ActionNoiseMatchesPolicyStd) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kOff);
  cfg.num_envs = 16;
  cfg.horizon = 32;
  cfg.init_std = 0.5;
  Harness h(cfg);
  h.Collect();
  // Log-probability of each stored action under the stored policy.
  const double n = static_cast<double>(h.buffer.actions.rows());
  const double mean_logp = h.buffer.log_probs.cast<double>().mean();
  const double expected = -n * (std::log(0.5) + 0.5 * std::log(2.0 * M_PI) + 0.5);
  EXPECT_NEAR(mean_logp, expected, 0.25);
}

TEST(PpoUpdateTest, FirstMinibatchHasUnitRatio) {
  Harness h(SmallConfig(IdHeadMode::kRewardPlusAux));
  h.Collect();
  Rng rng(3);
  const UpdateStats s = PpoUpdate(h.model, h.buffer, h.cfg, rng);
  ASSERT_FALSE(s.minibatches.empty());
  const MinibatchStats& first = s.minibatches.front();
  EXPECT_NEAR(first.mean_ratio, 1.0, 1e-6);
  EXPECT_NEAR(first.approx_kl, 0.0, 1e-6);
  EXPECT_EQ(first.clip_fraction, 0.0);
  // One minibatch holds the whole (normalized) batch.
  const double mean_adv = h.buffer.advantages.cast<double>().mean();
  EXPECT_NEAR(first.surrogate, -mean_adv, 1e-6);
}

TEST(PpoUpdateTest, ReportedTotalEqualsSumOfTerms) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  cfg.epochs = 3;
  cfg.minibatches = 4;
  cfg.entropy_coef = 0.01;
  Harness h(cfg);
  h.Collect();
  Rng rng(3);
  const UpdateStats s = PpoUpdate(h.model, h.buffer, h.cfg, rng);
  ASSERT_EQ(s.minibatches.size(), 12u);
  for (const MinibatchStats& m : s.minibatches) {
    const double sum = m.surrogate + m.value_term + m.entropy_term + m.dyn_term;
    EXPECT_NEAR(m.total, sum, 1e-6);
    EXPECT_NEAR(m.dyn_term, cfg.alpha_dyn * m.dyn_mse, 1e-9);
    EXPECT_LT(m.entropy_term, 0.0);
  }
  EXPECT_LT(s.max_audit_error, 1e-6);
}

TEST(PpoUpdateTest, ZeroAlphaLeavesIdHeadUntouched) {
  Harness h(SmallConfig(IdHeadMode::kRewardOnly));
  ASSERT_EQ(h.cfg.alpha_dyn, 0.0);
  h.Collect();
  const auto before = Snapshot(h.model, "policy.id_head");
  ASSERT_EQ(before.size(), 2u);
  Rng rng(3);
  const UpdateStats s = PpoUpdate(h.model, h.buffer, h.cfg, rng);
  EXPECT_EQ(s.dyn_term, 0.0);
  EXPECT_GT(s.dyn_mse, 0.0);
  EXPECT_TRUE(SameValues(before, Snapshot(h.model, "policy.id_head")));
  EXPECT_FALSE(SameValues(Snapshot(h.model, "policy.action_head"),
                          [&] {
                            Harness fresh(SmallConfig(IdHeadMode::kRewardOnly));
                            return Snapshot(fresh.model, "policy.action_head");
                          }()));
}

TEST(PpoUpdateTest, ZeroAdvantageWithoutAuxiliaryTermsFreezesPolicy) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kRewardOnly);
  cfg.value_coef = 0.0;
  Harness h(cfg);
  h.Collect();
  h.buffer.advantages.setZero();
  const uint32_t before = h.model.policy.PolicyChecksum();
  const auto encoder = Snapshot(h.model, "encoder");
  Rng rng(3);
  PpoUpdate(h.model, h.buffer, h.cfg, rng);
  EXPECT_EQ(h.model.policy.PolicyChecksum(), before);
  EXPECT_TRUE(SameValues(encoder, Snapshot(h.model, "encoder")));
}

TEST(PpoUpdateTest, ZeroAdvantageOnlyDynamicsPathMoves) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  cfg.value_coef = 0.0;
  Harness h(cfg);
  h.Collect();
  h.buffer.advantages.setZero();
  const auto action_head = Snapshot(h.model, "policy.action_head");
  const auto log_std = Snapshot(h.model, "policy.log_std");
  const auto id_head = Snapshot(h.model, "policy.id_head");
  const auto trunk = Snapshot(h.model, "policy.trunk");
  const auto critic = Snapshot(h.model, "critic");
  Rng rng(3);
  PpoUpdate(h.model, h.buffer, h.cfg, rng);
  EXPECT_TRUE(SameValues(action_head, Snapshot(h.model, "policy.action_head")));
  EXPECT_TRUE(SameValues(log_std, Snapshot(h.model, "policy.log_std")));
  EXPECT_TRUE(SameValues(critic, Snapshot(h.model, "critic")));
  EXPECT_FALSE(SameValues(id_head, Snapshot(h.model, "policy.id_head")));
  EXPECT_FALSE(SameValues(trunk, Snapshot(h.model, "policy.trunk")));
}

TEST(PpoUpdateTest, ZeroAdvantageOnlyValuePathMoves) {
  Harness h(SmallConfig(IdHeadMode::kOff));
  h.Collect();
  h.buffer.advantages.setZero();
  const uint32_t before = h.model.policy.PolicyChecksum();
  const auto critic = Snapshot(h.model, "critic");
  Rng rng(3);
  PpoUpdate(h.model, h.buffer, h.cfg, rng);
  EXPECT_EQ(h.model.policy.PolicyChecksum(), before);
  EXPECT_FALSE(SameValues(critic, Snapshot(h.model, "critic")));
}

TEST(PpoUpdateTest, UpdateIsDeterministic) {
  const TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  Harness a(cfg), b(cfg);
  a.Collect();
  b.Collect();
  Rng ra(9), rb(9);
  PpoUpdate(a.model, a.buffer, a.cfg, ra);
  PpoUpdate(b.model, b.buffer, b.cfg, rb);
  EXPECT_EQ(a.model.policy.PolicyChecksum(), b.model.policy.PolicyChecksum());
}

TEST(TeacherPolicyTest, HeadSharesTrunkAndOtherWeightsIgnoreIt) {
  const TrainConfig with = SmallConfig(IdHeadMode::kRewardPlusAux);
  const TrainConfig without = SmallConfig(IdHeadMode::kOff);
  TeacherModel a, b;
  a.Build(with, 17);
  b.Build(without, 17);
  EXPECT_EQ(a.policy.dims().torque_dim, a.policy.dims().action_dim);
  EXPECT_EQ(b.policy.dims().torque_dim, 0);
  EXPECT_TRUE(SameValues(Snapshot(a, "policy.trunk"), Snapshot(b, "policy.trunk")));
  EXPECT_TRUE(SameValues(Snapshot(a, "encoder"), Snapshot(b, "encoder")));
  EXPECT_TRUE(SameValues(Snapshot(a, "critic"), Snapshot(b, "critic")));
  EXPECT_EQ(a.policy.WithoutIdHead().PolicyChecksum(), b.policy.PolicyChecksum());
  EXPECT_THROW(b.policy.PredictTorque(nn::Matrix::Zero(128, 1)), UsageError);
}

TEST(TeacherPolicyTest, HeadRemovalGivesBitIdenticalActionTrajectories) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  TeacherModel model;
  model.Build(cfg, 21);
  const testsupport::HeadRemovalResult r =
      testsupport::CompareHeadRemoval(model.policy, cfg.env, 21, 300);
  EXPECT_EQ(r.steps, 300);
  EXPECT_TRUE(r.identical) << "first mismatch at step " << r.first_mismatch;
}

TEST(TeacherPolicyTest, CheckpointRoundTrip) {
  TeacherModel model;
  const TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  model.Build(cfg, 4);
  const nn::Checkpoint ckpt = TeacherCheckpoint(model, cfg, 4, 0);
  const TeacherPolicy loaded = TeacherPolicy::FromCheckpoint(ckpt);
  EXPECT_EQ(loaded.PolicyChecksum(), model.policy.PolicyChecksum());
  EXPECT_EQ(ckpt.meta.at("policy_checksum").get<uint32_t>(), model.policy.PolicyChecksum());
  EXPECT_TRUE(loaded.has_id_head());
}

TEST(TeacherPolicyTest, GaussianLogProbAndEntropy) {
  Eigen::VectorXf log_std(2);
  log_std << 0.0f, std::log(2.0f);
  nn::Matrix mean = nn::Matrix::Zero(2, 1), act(2, 1);
  act << 1.0f, 2.0f;
  const float logp = GaussianLogProb(act, mean, log_std)[0];
  const double expected = -0.5 - 0.5 - std::log(2.0) - std::log(2.0 * M_PI);
  EXPECT_NEAR(logp, expected, 1e-6);
  EXPECT_NEAR(GaussianEntropy(log_std), std::log(2.0) + std::log(2.0 * M_PI) + 1.0, 1e-6);
}

TEST(TrainConfigTest, ModeDefaults) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.alpha_dyn, 3e-4);
  EXPECT_EQ(cfg.w_dyn, -1e-2);
  const TrainConfig ro =
      TrainConfig::FromConfig(KvConfig::Parse("train.id_mode = reward_only\n"));
  EXPECT_EQ(ro.alpha_dyn, 0.0);
  EXPECT_EQ(ro.w_dyn, -5e-4);
  EXPECT_TRUE(ro.env.reward.dynamics_enabled);
  EXPECT_EQ(ro.env.reward.w_dyn, -5e-4);
  const TrainConfig off = TrainConfig::FromConfig(KvConfig::Parse("train.id_mode = off\n"));
  EXPECT_FALSE(off.id_head());
  EXPECT_FALSE(off.env.reward.dynamics_enabled);
}

TEST(TrainConfigTest, RejectsInvalidValues) {
  EXPECT_THROW(TrainConfig::FromConfig(KvConfig::Parse("train.id_mode = sometimes\n")),
               ConfigError);
  EXPECT_THROW(TrainConfig::FromConfig(KvConfig::Parse("train.gamma = 1.0\n")), ConfigError);
  EXPECT_THROW(TrainConfig::FromConfig(
                   KvConfig::Parse("train.id_mode = reward_only\ntrain.alpha_dyn = 0.1\n")),
               ConfigError);
  EXPECT_THROW(TrainConfig::FromConfig(KvConfig::Parse("train.w_dyn = 0.5\n")), ConfigError);
  EXPECT_THROW(TrainConfig::FromConfig(KvConfig::Parse("terrain.level = 10\n")), ConfigError);
}

TEST(TrainingLogTest, DynamicsColumnOnlyWhenEnabled) {
  const std::string on = TrainingLogHeader(true);
  const std::string off = TrainingLogHeader(false);
  EXPECT_NE(on.find(std::string(",") + reward::kDynamicsName + ","), std::string::npos);
  EXPECT_EQ(off.find(std::string(",") + reward::kDynamicsName + ","), std::string::npos);
  for (const char* name : reward::kComponentNames) {
    EXPECT_NE(off.find(name), std::string::npos) << name;
  }
  IterationLog log;
  const auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  EXPECT_EQ(count(TrainingLogRow(log, true)), count(on));
  EXPECT_EQ(count(TrainingLogRow(log, false)), count(off));
}

TEST(TrainTeacherTest, SmokeRunWritesRowsAndCheckpoints) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  cfg.num_envs = 8;
  cfg.horizon = 16;
  cfg.iterations = 10;
  cfg.checkpoint_every = 5;
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "dynaware_train_smoke";
  std::filesystem::remove_all(dir);
  const TrainResult result = TrainTeacher(cfg, 1, TrainOptions{dir.string(), nullptr});
  EXPECT_EQ(result.log.size(), 10u);
  std::ifstream csv(dir / "train_log.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 10);
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "iter_00005.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "iter_00010.ckpt"));
  const nn::Checkpoint ckpt = nn::LoadCheckpoint((dir / "teacher.ckpt").string());
  EXPECT_EQ(TeacherPolicy::FromCheckpoint(ckpt).PolicyChecksum(),
            result.model->policy.PolicyChecksum());
  std::filesystem::remove_all(dir);
}

TEST(TrainTeacherTest, SameSeedSameTeacher) {
  TrainConfig cfg = SmallConfig(IdHeadMode::kRewardPlusAux);
  const TrainResult a = TrainTeacher(cfg, 8);
  const TrainResult b = TrainTeacher(cfg, 8);
  const TrainResult c = TrainTeacher(cfg, 9);
  EXPECT_EQ(a.model->policy.PolicyChecksum(), b.model->policy.PolicyChecksum());
  EXPECT_NE(a.model->policy.PolicyChecksum(), c.model->policy.PolicyChecksum());
}

}  // namespace
}  // namespace dynaware::learner
