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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"
#include "dynaware/common/rng.h"
#include "dynaware/sim/simulator.h"
#include "dynaware/sim/types.h"
#include "tests/support/physics_checks.h"

namespace dynaware::sim {
namespace {

using testsupport::PdHold;

TEST(RobotModelTest, DefaultsAreValid) {
  const RobotModel m = RobotModel::PlanarQuadruped();
  EXPECT_EQ(m.n_joints, 8);
  EXPECT_EQ(m.num_dofs(), 11);
  EXPECT_NO_THROW(m.Validate());
}

TEST(RobotModelTest, RejectsBrokenInvariants) {
  RobotModel m = RobotModel::PlanarQuadruped();
  m.link_masses[3] = 0.0;
  EXPECT_THROW(m.Validate(), ConfigError);
  m = RobotModel::PlanarQuadruped();
  m.q_lower[0] = m.q_upper[0];
  EXPECT_THROW(m.Validate(), ConfigError);
  m = RobotModel::PlanarQuadruped();
  m.torque_limit = 0.0;
  EXPECT_THROW(m.Validate(), ConfigError);
}

TEST(RobotModelTest, LoadsFromConfig) {
  const KvConfig cfg = KvConfig::Parse("model.base_mass = 7.5\nmodel.torque_limit = 30\n");
  const RobotModel m = RobotModel::FromConfig(cfg);
  EXPECT_DOUBLE_EQ(m.base_mass, 7.5);
  EXPECT_DOUBLE_EQ(m.torque_limit, 30.0);
}

TEST(RandomizationSpecTest, DefaultsMatchPublishedTable) {
  const RandomizationSpec s;
  EXPECT_EQ(s.com_displacement.lo, -0.15);
  EXPECT_EQ(s.com_displacement.hi, 0.15);
  EXPECT_EQ(s.motor_strength.lo, 0.9);
  EXPECT_EQ(s.motor_strength.hi, 1.1);
  EXPECT_EQ(s.motor_offset.lo, -0.02);
  EXPECT_EQ(s.motor_offset.hi, 0.02);
  EXPECT_EQ(s.friction.lo, 0.05);
  EXPECT_EQ(s.friction.hi, 4.5);
  EXPECT_EQ(s.restitution.lo, 0.0);
  EXPECT_EQ(s.restitution.hi, 0.4);
  EXPECT_EQ(s.dof_position_noise, 0.01);
  EXPECT_EQ(s.dof_velocity_noise, 1.5);
  EXPECT_EQ(s.gravity_noise, 0.05);
}

TEST(ResetTest, CollapsedRangesGiveMidpoints) {
  const RobotModel m = RobotModel::PlanarQuadruped();
  const auto r = Reset(m, RandomizationSpec::Nominal(), GenerateTerrain(TerrainKind::kFlat, 0, 0), 0);
  EXPECT_DOUBLE_EQ(r.params.friction, 0.5 * (0.05 + 4.5));
  EXPECT_DOUBLE_EQ(r.params.com_offset, 0.0);
  EXPECT_DOUBLE_EQ(r.state.base_z(), m.h_target);
}

TEST(ResetTest, SampledParametersStayInRange) {
  const RobotModel m = RobotModel::PlanarQuadruped();
  const RandomizationSpec spec;
  const TerrainConfig flat = GenerateTerrain(TerrainKind::kFlat, 0, 0);
  for (uint64_t seed = 0; seed < 10000; ++seed) {
    const auto r = Reset(m, spec, flat, seed);
    ASSERT_TRUE(spec.friction.Contains(r.params.friction));
    ASSERT_TRUE(spec.restitution.Contains(r.params.restitution));
    ASSERT_TRUE(spec.com_displacement.Contains(r.params.com_offset));
    for (int j = 0; j < m.n_joints; ++j) {
      ASSERT_TRUE(spec.motor_strength.Contains(r.params.motor_strength[j]));
      ASSERT_TRUE(spec.motor_offset.Contains(r.params.motor_offset[j]));
      ASSERT_LE(std::abs(r.state.position[kNumBaseDofs + j] - m.q_nominal[j]),
                kSpawnJointPerturbation);
    }
  }
}

TEST(ResetTest, SameSeedIsBitIdentical) {
  const RobotModel m = RobotModel::PlanarQuadruped();
  const TerrainConfig rough = GenerateTerrain(TerrainKind::kRough, 3, 5);
  const auto a = Reset(m, RandomizationSpec(), rough, 42);
  const auto b = Reset(m, RandomizationSpec(), rough, 42);
  EXPECT_EQ(a.state.position, b.state.position);
  EXPECT_EQ(a.state.velocity, b.state.velocity);
  EXPECT_EQ(a.params.friction, b.params.friction);
  EXPECT_EQ(a.params.motor_strength, b.params.motor_strength);
  EXPECT_EQ(a.params.motor_offset, b.params.motor_offset);
  const auto c = Reset(m, RandomizationSpec(), rough, 43);
  EXPECT_NE(a.params.friction, c.params.friction);
}

TEST(ResetTest, InvalidRangeIsConfigError) {
  RandomizationSpec spec;
  spec.friction = {2.0, 1.0};
  EXPECT_THROW(Reset(RobotModel::PlanarQuadruped(), spec, GenerateTerrain(TerrainKind::kFlat, 0, 0), 1),
               ConfigError);

}

class FreeFallTest : public ::testing::Test {
 protected:
  RobotModel model_ = RobotModel::PlanarQuadruped();
  TerrainConfig flat_ = GenerateTerrain(TerrainKind::kFlat, 0, 0);
  EpisodeParams params_ = Reset(model_, RandomizationSpec::Nominal(), flat_, 0).params;

  RobotState Suspended(double height) const {
    RobotState s = Reset(model_, RandomizationSpec::Nominal(), flat_, 3).state;
    s.position[1] = height;
    return s;
  }
};

TEST_F(FreeFallTest, VerticalVelocityFollowsGravity) {
  RobotState s = Suspended(2.0);
  const std::vector<double> zero(model_.n_joints, 0.0);
  const RobotState next = StepPhysics(model_, s, zero, params_, flat_, kPhysicsDt);
  EXPECT_LT(next.base_z(), s.base_z());
  EXPECT_NEAR(next.base_vz() - s.base_vz(), -model_.gravity * kPhysicsDt, 1e-9);
  for (bool c : next.foot_contact) EXPECT_FALSE(c);
}

TEST_F(FreeFallTest, MechanicalEnergyDriftBelowOnePercent) {
  EXPECT_LT(testsupport::FreeFallMaxRelativeDrift(5, 100, 11), 0.01);
}

TEST_F(FreeFallTest, NonFiniteTorqueIsNumericError) {
  std::vector<double> tau(model_.n_joints, 0.0);
  tau[2] = std::nan("");
  EXPECT_THROW(StepPhysics(model_, Suspended(1.0), tau, params_, flat_, kPhysicsDt), NumericError);
  tau[2] = INFINITY;
  EXPECT_THROW(StepPhysics(model_, Suspended(1.0), tau, params_, flat_, kPhysicsDt), NumericError);
}

TEST_F(FreeFallTest, WrongTorqueCountIsConfigError) {
  const std::vector<double> tau(3, 0.0);
  EXPECT_THROW(StepPhysics(model_, Suspended(1.0), tau, params_, flat_, kPhysicsDt), ConfigError);
}

class StandingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto r = Reset(model_, RandomizationSpec::Nominal(), flat_, 0);
    params_ = r.params;
    state_ = r.state;
    for (int step = 0; step < 600; ++step) {
      state_ = StepPhysics(model_, state_, PdHold(model_, state_), params_, flat_, kPhysicsDt);
    }
  }
  RobotModel model_ = RobotModel::PlanarQuadruped();
  TerrainConfig flat_ = GenerateTerrain(TerrainKind::kFlat, 0, 0);
  EpisodeParams params_;
  RobotState state_;
};

TEST(StandingBalanceTest, ContactForcesBalanceWeight) {
  const testsupport::StandingBalance b = testsupport::MeasureStandingBalance();
  EXPECT_NEAR(b.mean_normal_force, b.weight, 0.02 * b.weight);
  EXPECT_NEAR(b.mean_height, b.target_height, 0.05 * b.target_height);
}

TEST_F(StandingTest, ContactFlagsMatchThreshold) {
  for (int step = 0; step < 50; ++step) {
    state_ = StepPhysics(model_, state_, PdHold(model_, state_), params_, flat_, kPhysicsDt);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      EXPECT_GE(state_.foot_force[leg].y(), 0.0);
      EXPECT_EQ(state_.foot_contact[leg], state_.foot_force[leg].y() > contact::kThreshold);
    }
  }
}

TEST_F(StandingTest, PrivilegedStateReflectsGroundTruth) {
  const PrivilegedState p = AssemblePrivileged(model_, state_, params_, flat_);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_TRUE(p.foot_contact[leg]);
    EXPECT_GT(p.contact_force_magnitude[leg], 0.0);
    for (double h : p.terrain_height[leg]) EXPECT_EQ(h, 0.0);
  }
  EXPECT_EQ(p.friction, params_.friction);
  EXPECT_EQ(p.Flatten().size(), PrivilegedState::Dim(model_.n_joints));
  state_ = StepPhysics(model_, state_, PdHold(model_, state_), params_, flat_, kPhysicsDt);
  EXPECT_EQ(AssemblePrivileged(model_, state_, params_, flat_).friction, params_.friction);
}

TEST(EpisodeDeterminismTest, RolloutIsPureFunctionOfInputs) {
  EXPECT_TRUE(testsupport::PhysicsRolloutDeterministic());
}

TEST(ProjectGravityTest, KnownAngles) {
  const Vec2 g0 = ProjectGravity(0.0);
  EXPECT_NEAR(g0.x(), 0.0, 1e-15);
  EXPECT_NEAR(g0.y(), -1.0, 1e-15);
  const Vec2 gpi = ProjectGravity(std::numbers::pi);
  EXPECT_NEAR(gpi.x(), 0.0, 1e-12);
  EXPECT_NEAR(gpi.y(), 1.0, 1e-12);
}

TEST(ProjectGravityTest, MatchesRotationMatrixOracle) {
  for (double pitch : {0.3, -0.7, 1.4, 2.9}) {
    Eigen::Matrix2d rot;
    rot << std::cos(pitch), -std::sin(pitch), std::sin(pitch), std::cos(pitch);
    const Vec2 expected = rot.transpose() * Vec2(0.0, -1.0);
    const Vec2 g = ProjectGravity(pitch);
    EXPECT_NEAR(g.x(), expected.x(), 1e-12);
    EXPECT_NEAR(g.y(), expected.y(), 1e-12);
    EXPECT_NEAR(g.norm(), 1.0, 1e-12);
  }
}

class ObservationTest : public ::testing::Test {
 protected:
  RobotModel model_ = RobotModel::PlanarQuadruped();
  RobotState state_ = [this] {
    RobotState s = Reset(model_, RandomizationSpec(), GenerateTerrain(TerrainKind::kFlat, 0, 0), 8).state;
    s.position[2] = 0.2;
    for (int j = 0; j < model_.n_joints; ++j) s.velocity[kNumBaseDofs + j] = 0.1 * j;
    return s;
  }();
  Eigen::VectorXd prev_ = Eigen::VectorXd::LinSpaced(8, -0.4, 0.4);
  Command cmd_{0.45, 0.0};
};

TEST_F(ObservationTest, ZeroNoiseReproducesState) {
  RandomizationSpec spec = RandomizationSpec::Nominal();
  Rng rng(1);
  const Observation o = AssembleObservation(model_, state_, prev_, cmd_, spec, rng);
  EXPECT_EQ(o.q, Eigen::VectorXd(state_.joint_positions()));
  EXPECT_EQ(o.qd, Eigen::VectorXd(state_.joint_velocities()));
  EXPECT_EQ(o.gravity, ProjectGravity(0.2));
  EXPECT_EQ(o.prev_action, prev_);
}

TEST_F(ObservationTest, LayoutOrderAndDimension) {
  Rng rng(1);
  const Observation o = AssembleObservation(model_, state_, prev_, cmd_, RandomizationSpec::Nominal(), rng);
  const Eigen::VectorXf flat = o.Flatten();
  const int n = model_.n_joints;
  ASSERT_EQ(flat.size(), 3 * n + 2 + 2);
  EXPECT_EQ(Observation::Dim(n), 28);
  for (int j = 0; j < n; ++j) {
    EXPECT_EQ(flat[j], static_cast<float>(o.q[j]));
    EXPECT_EQ(flat[n + j], static_cast<float>(o.qd[j]));
    EXPECT_EQ(flat[2 * n + 2 + j], static_cast<float>(prev_[j]));
  }
  EXPECT_EQ(flat[2 * n], static_cast<float>(o.gravity.x()));
  EXPECT_EQ(flat[2 * n + 1], static_cast<float>(o.gravity.y()));
  EXPECT_EQ(flat[3 * n + 2], 0.45f);
  EXPECT_EQ(flat[3 * n + 3], 0.0f);
}

TEST_F(ObservationTest, NoiseBoundedByTableMagnitudes) {
  const RandomizationSpec spec;
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const Observation o = AssembleObservation(model_, state_, prev_, cmd_, spec, rng);
    for (int j = 0; j < model_.n_joints; ++j) {
      ASSERT_LE(std::abs(o.q[j] - state_.position[kNumBaseDofs + j]), 0.01);
      ASSERT_LE(std::abs(o.qd[j] - state_.velocity[kNumBaseDofs + j]), 1.5);
    }
    ASSERT_LE((o.gravity - ProjectGravity(0.2)).cwiseAbs().maxCoeff(), 0.05);
    ASSERT_EQ(o.prev_action, prev_);
    ASSERT_EQ(o.lin_vel_cmd, cmd_.lin_vel);
  }
}

TEST_F(ObservationTest, WrongActionDimensionIsConfigError) {
  Rng rng(1);
  EXPECT_THROW(AssembleObservation(model_, state_, Eigen::VectorXd::Zero(5), cmd_, RandomizationSpec(), rng),
               ConfigError);
}

TEST(TerrainTest, FlatIsZero) {
  for (int level : {0, 5, 9}) {
    EXPECT_EQ(GenerateTerrain(TerrainKind::kFlat, level, 123).MaxAbsHeight(), 0.0);
  }
}

TEST(TerrainTest, RoughAmplitudeGrowsWithLevel) {
  for (uint64_t seed : {1u, 2u, 3u}) {
    const TerrainConfig easy = GenerateTerrain(TerrainKind::kRough, 0, seed);
    const TerrainConfig hard = GenerateTerrain(TerrainKind::kRough, 9, seed);
    EXPECT_GT(hard.MaxAbsHeight(), easy.MaxAbsHeight());
    EXPECT_LE(easy.MaxAbsHeight(), 0.01);
    EXPECT_LE(hard.MaxAbsHeight(), 0.1);
  }
}

TEST(TerrainTest, DeterministicPerSeed) {
  EXPECT_EQ(GenerateTerrain(TerrainKind::kRough, 6, 4).heights,
            GenerateTerrain(TerrainKind::kRough, 6, 4).heights);
  EXPECT_NE(GenerateTerrain(TerrainKind::kRough, 6, 4).heights,
            GenerateTerrain(TerrainKind::kRough, 6, 5).heights);
}

TEST(TerrainTest, LevelOutOfRangeIsConfigError) {
  EXPECT_THROW(GenerateTerrain(TerrainKind::kRough, 10, 0), ConfigError);
  EXPECT_THROW(GenerateTerrain(TerrainKind::kFlat, -1, 0), ConfigError);
  EXPECT_THROW(ParseTerrainKind("stairs"), ConfigError);
}

TEST(TerrainTest, CsvExportHasHeaderAndAllSamples) {
  const TerrainConfig t = GenerateTerrain(TerrainKind::kRough, 2, 1);
  const std::string csv = t.ToCsv();
  EXPECT_EQ(csv.rfind("x,height\n", 0), 0u);
  EXPECT_EQ(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')), t.heights.size() + 1);
}

}  // namespace
}  // namespace dynaware::sim
