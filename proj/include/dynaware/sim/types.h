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

#ifndef DYNAWARE_SIM_TYPES_H_
#define DYNAWARE_SIM_TYPES_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dynaware {
class KvConfig;
}

namespace dynaware::sim {

inline constexpr int kNumLegs = 4;
inline constexpr int kNumBaseDofs = 3;  // x, z, pitch

// Leg order used everywhere: front-left, front-right, rear-left, rear-right.
// In the sagittal plane left and right legs share a hip location.
inline constexpr std::array<const char*, kNumLegs> kLegNames = {"FL", "FR", "RL", "RR"};

using Vec2 = Eigen::Vector2d;

// Kinematic and inertial description of the planar quadruped. Joint i belongs
// to leg i / joints_per_leg(); within a leg the first joint is the hip.
struct RobotModel {
  int n_joints = 8;
  double base_mass = 6.0;
  double base_length = 0.5;      // collision box
  double base_thickness = 0.1;
  double hip_offset = 0.19;      // |x| of the hip pivots in the base frame
  std::vector<double> link_masses;
  std::vector<double> link_lengths;
  std::vector<double> q_lower;
  std::vector<double> q_upper;
  std::vector<double> q_nominal;
  double joint_velocity_limit = 30.0;  // rad/s
  double torque_limit = 25.0;          // N·m, all joints
  double armature = 0.01;              // reflected rotor inertia, kg·m²
  double h_target = 0.33;              // nominal standing base height, m
  double gravity = 9.81;

  // 8-joint planar quadruped (hip + knee per leg).
  static RobotModel PlanarQuadruped();
  // Reads "model.*" keys on top of PlanarQuadruped() defaults.
  static RobotModel FromConfig(const KvConfig& config);

  int joints_per_leg() const { return n_joints / kNumLegs; }
  int num_dofs() const { return n_joints + kNumBaseDofs; }
  double TotalMass() const;
  double BaseInertia() const;

  // Throws ConfigError when an invariant is violated.
  void Validate() const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  bool Contains(double v) const { return v >= lo && v <= hi; }
};

// Per-episode physical randomization and sensor-noise magnitudes.
struct RandomizationSpec {
  Range com_displacement{-0.15, 0.15};  // m, along the base x axis
  Range motor_strength{0.9, 1.1};       // multiplier
  Range motor_offset{-0.02, 0.02};      // rad
  Range friction{0.05, 4.5};
  Range restitution{0.0, 0.4};
  double dof_position_noise = 0.01;  // rad
  double dof_velocity_noise = 1.5;   // rad/s
  double gravity_noise = 0.05;       // on projected gravity components

  // Ranges collapsed to their midpoints and zero sensor noise.
  static RandomizationSpec Nominal();
  static RandomizationSpec FromConfig(const KvConfig& config);
  void Validate() const;
};

// Physical parameters sampled once per episode.
struct EpisodeParams {
  double friction = 1.0;
  double restitution = 0.0;
  double com_offset = 0.0;
  std::vector<double> motor_strength;
  std::vector<double> motor_offset;
};

enum class TerrainKind { kFlat, kRough };

// 1-D heightfield over x, linearly interpolated between samples.
struct TerrainConfig {
  TerrainKind kind = TerrainKind::kFlat;
  int level = 0;
  uint64_t seed = 0;
  double cell_size = 0.1;
  double x_min = -40.0;
  std::vector<double> heights;  // heights[i] at x_min + i * cell_size

  double Height(double x) const;
  double Slope(double x) const;
  double MaxAbsHeight() const;
  // "x,height" rows with a header line.
  std::string ToCsv() const;
};

// Full simulator state. Generalized coordinates are
// [base x, base z, pitch, q_0 .. q_{n-1}] with pitch counter-clockwise
// (nose up) in the x-z plane.
struct RobotState {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  std::array<bool, kNumLegs> foot_contact{};
  std::array<Vec2, kNumLegs> foot_force{Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  std::array<double, kNumLegs> foot_velocity_x{};
  // Contact force magnitude per collision body: base, then the upper link of
  // each leg.
  std::array<double, kNumLegs + 1> collision_force{};
  double com_offset = 0.0;
  double time = 0.0;

  double base_x() const { return position[0]; }
  double base_z() const { return position[1]; }
  double pitch() const { return position[2]; }
  double base_vx() const { return velocity[0]; }
  double base_vz() const { return velocity[1]; }
  double pitch_rate() const { return velocity[2]; }
  auto joint_positions() const { return position.tail(position.size() - kNumBaseDofs); }
  auto joint_velocities() const { return velocity.tail(velocity.size() - kNumBaseDofs); }
  // Forward velocity expressed in the base frame.
  double ForwardVelocity() const;
};

struct Command {
  double lin_vel = 0.0;  // m/s along the base x axis
  double ang_vel = 0.0;  // yaw rate; always 0 in the plane
};

}  // namespace dynaware::sim

#endif  // DYNAWARE_SIM_TYPES_H_
