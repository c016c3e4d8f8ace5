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

#ifndef DYNAWARE_SIM_SIMULATOR_H_
#define DYNAWARE_SIM_SIMULATOR_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dynaware/common/rng.h"
#include "dynaware/sim/types.h"

namespace dynaware::sim {

// Ground contact model constants.
namespace contact {
inline constexpr double kStiffness = 1.0e4;             // N/m
inline constexpr double kDamping = 300.0;               // N·s/m while compressing
inline constexpr double kTangentialDamping = 1.0e5;     // N·s/m, sticking regime
inline constexpr double kThreshold = 1.0;               // N, contact flag threshold
inline constexpr double kJointLimitStiffness = 100.0;   // N·m/rad
inline constexpr double kJointLimitDamping = 1.0;       // N·m·s/rad
}  // namespace contact

inline constexpr double kPhysicsDt = 0.005;
inline constexpr int kControlDecimation = 4;
inline constexpr double kControlDt = kPhysicsDt * kControlDecimation;
inline constexpr double kSpawnJointPerturbation = 0.05;
inline constexpr double kFallPitch = 1.0;
inline constexpr double kFallHeightFraction = 0.5;

// Inertial body: the base (index 0) or one leg link.
struct BodyKinematics {
  double mass = 0.0;
  double inertia = 0.0;  // about the COM
  Vec2 com = Vec2::Zero();
  Eigen::Matrix<double, 2, Eigen::Dynamic> jacobian;  // d com / d generalized velocity
  Eigen::RowVectorXd angle_jacobian;
  Vec2 bias_acceleration = Vec2::Zero();  // com acceleration at zero generalized acceleration
};

enum class SiteKind { kFoot, kKnee, kBaseCorner };

// Point that can touch the ground.
struct ContactSite {
  SiteKind kind = SiteKind::kFoot;
  int leg = -1;             // -1 for base corners
  int collision_body = -1;  // 0 base, 1 + leg for upper links, -1 for feet
  Vec2 position = Vec2::Zero();
  Eigen::Matrix<double, 2, Eigen::Dynamic> jacobian;
};

struct Kinematics {
  std::vector<BodyKinematics> bodies;
  std::vector<ContactSite> sites;
};

Kinematics ComputeKinematics(const RobotModel& model, const Eigen::VectorXd& position,
                             const Eigen::VectorXd& velocity, double com_offset);
Eigen::MatrixXd MassMatrix(const RobotModel& model, const Kinematics& kin);
// Coriolis/centripetal plus gravity terms h such that M·v̇ = τ + Jᵀf − h.
Eigen::VectorXd BiasForces(const RobotModel& model, const Kinematics& kin);

struct ResetResult {
  RobotState state;
  EpisodeParams params;
};

// Samples episode parameters and spawns the robot at the nominal stance with
// its base h_target above the terrain. Pure function of its arguments.
ResetResult Reset(const RobotModel& model, const RandomizationSpec& spec,
                  const TerrainConfig& terrain, uint64_t seed);

// One semi-implicit Euler step. Contact is a spring-damper along the terrain
// normal with Coulomb-clamped tangential damping; damping terms are treated
// implicitly. Throws NumericError on non-finite torques or state.
RobotState StepPhysics(const RobotModel& model, const RobotState& state,
                       std::span<const double> torques, const EpisodeParams& params,
                       const TerrainConfig& terrain, double dt);

// World gravity direction (0, -1) expressed in the base frame.
Vec2 ProjectGravity(double pitch);

// Base height above the terrain directly below the base origin.
double BaseHeight(const RobotState& state, const TerrainConfig& terrain);

// |pitch| > kFallPitch or base height below kFallHeightFraction·h_target.
bool HasFallen(const RobotModel& model, const RobotState& state, const TerrainConfig& terrain);

// Foot positions in the world frame.
std::array<Vec2, kNumLegs> FootPositions(const RobotModel& model, const RobotState& state);

// Policy-visible observation o_t = [q, q̇, g, a_{t-1}, v_cmd, ω_cmd].
struct Observation {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
  Vec2 gravity = Vec2(0.0, -1.0);
  Eigen::VectorXd prev_action;
  double lin_vel_cmd = 0.0;
  double ang_vel_cmd = 0.0;

  static int Dim(int n_joints) { return 3 * n_joints + 4; }
  Eigen::VectorXf Flatten() const;
};

// Simulator-only quantities, never noised.
struct PrivilegedState {
  Eigen::Vector3d body_velocity = Eigen::Vector3d::Zero();  // vx, vz, pitch rate
  double com_displacement = 0.0;
  std::array<bool, kNumLegs> foot_contact{};
  std::array<Vec2, kNumLegs> contact_force{};
  std::array<double, kNumLegs> contact_force_magnitude{};
  double friction = 0.0;
  double restitution = 0.0;
  std::array<std::array<double, 4>, kNumLegs> terrain_height{};
  Eigen::VectorXd motor_strength;

  static constexpr std::array<double, 4> kStencil = {-0.15, -0.05, 0.05, 0.15};
  static int Dim(int n_joints) { return 3 + 1 + 4 + 8 + 4 + 2 + 16 + n_joints; }
  Eigen::VectorXf Flatten() const;
};

// Additive uniform noise of the configured magnitudes on q, q̇ and g; none on the
// command or previous action.
Observation AssembleObservation(const RobotModel& model, const RobotState& state,
                                const Eigen::VectorXd& prev_action, const Command& command,
                                const RandomizationSpec& spec, Rng& rng);

PrivilegedState AssemblePrivileged(const RobotModel& model, const RobotState& state,
                                   const EpisodeParams& params, const TerrainConfig& terrain);

inline constexpr int kNumTerrainLevels = 10;
inline constexpr double kRoughAmplitudePerLevel = 0.01;

// Flat: zero heightfield. Rough: heights uniform in [0, 0.01·(level+1)] m on
// a 0.1 m grid. Throws ConfigError when level is outside [0, 9].
TerrainConfig GenerateTerrain(TerrainKind kind, int level, uint64_t seed);
TerrainKind ParseTerrainKind(const std::string& name);
const char* TerrainKindName(TerrainKind kind);

}  // namespace dynaware::sim

#endif  // DYNAWARE_SIM_SIMULATOR_H_
