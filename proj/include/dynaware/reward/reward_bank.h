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

#ifndef DYNAWARE_REWARD_REWARD_BANK_H_
#define DYNAWARE_REWARD_REWARD_BANK_H_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dynaware/sim/types.h"

namespace dynaware {
class KvConfig;
}

namespace dynaware::reward {

enum Component : int {
  kLinearVelocity = 0,
  kAngularVelocity,
  kOrientation,
  kZVelocity,
  kRollPitchVelocity,
  kBaseHeight,
  kCollision,
  kFootSlip,
  kTorque,
  kDofPosLimits,
  kDofVelocity,
  kDofAcceleration,
  kPower,
  kActionRate,
  kSmoothness1,
  kSmoothness2,
  kNumComponents
};

// Display names, also used as training-log CSV column headers.
inline constexpr std::array<const char*, kNumComponents> kComponentNames = {
    "Linear Velocity", "Angular Velocity", "Orientation",       "Z Velocity",
    "Roll-Pitch Vel.", "Base Height",      "Collision",         "Foot Slip",
    "Torque",          "DOF Pos. Limits",  "DOF Velocity",      "DOF Accel.",
    "Power",           "Action Rate",      "1st Order Smooth.", "2nd Order Smooth."};

inline constexpr const char* kDynamicsName = "Dynamics";

// Unscaled coefficients; the effective weight of each component is
// coefficient * dt.
inline constexpr std::array<double, kNumComponents> kDefaultCoefficients = {
    1.0, 0.5, -5.0, -0.02, -0.001, -30.0, -5.0, -0.04,
    -1e-4, -10.0, -1e-4, -2.5e-7, -2e-5, -0.01, -0.1, -0.1};

struct RewardConfig {
  double dt = 0.02;
  std::array<double, kNumComponents> coefficients = kDefaultCoefficients;
  double sigma_v = 0.25;
  double sigma_omega = 0.25;
  double lin_vel_threshold = 0.6;  // m/s, r_v saturates above this
  double collision_threshold = 0.1;  // N
  double w_dyn = -1e-2;
  bool dynamics_enabled = false;

  double weight(int i) const { return coefficients[i] * dt; }

  // Reads "reward.*" keys; coefficients by snake_case name, e.g.
  // reward.action_rate = -0.01 (before multiplication by dt).
  static RewardConfig FromConfig(const KvConfig& config);
  // Throws ConfigError when a weight has the wrong sign or, with the dynamics
  // reward enabled, w_dyn >= 0.
  void Validate() const;
};

// snake_case key for a component, e.g. "dof_pos_limits".
const char* ComponentKey(int component);

// Everything a single control-step reward depends on. Velocities are in the
// base frame.
struct RewardInputs {
  double forward_velocity = 0.0;   // v_x
  double vertical_velocity = 0.0;  // v_z
  double pitch = 0.0;
  double pitch_rate = 0.0;
  double yaw_rate = 0.0;  // identically 0 in the plane
  double base_height = 0.0;
  double h_target = 0.0;
  Eigen::VectorXd q, qd, qd_prev;
  Eigen::VectorXd q_lower, q_upper;
  std::array<bool, sim::kNumLegs> foot_contact{};
  std::array<double, sim::kNumLegs> foot_velocity{};
  std::vector<double> collision_force;
  // Raw policy actions a_t, a_{t-1}, a_{t-2}.
  Eigen::VectorXd action, action_prev, action_prev2;
  // Joint position targets q^d_t, q^d_{t-1}, q^d_{t-2}.
  Eigen::VectorXd target, target_prev, target_prev2;
  Eigen::VectorXd applied_torque;    // τ_a
  Eigen::VectorXd predicted_torque;  // τ_p, empty without an ID head
  sim::Command command;
};

struct RewardBreakdown {
  std::array<double, kNumComponents> raw{};
  std::array<double, kNumComponents> weighted{};
  double dynamics = 0.0;  // already weighted by w_dyn
  double total = 0.0;
};

RewardBreakdown ComputeRewards(const RewardInputs& in, const RewardConfig& cfg);

// Signed speed along the commanded direction; -|v| for a zero command.
double ProjectedCommandVelocity(double velocity, double command);
// 2-D form used by the planar stack and by tests.
double ProjectedCommandVelocity(const Eigen::Vector2d& velocity, const Eigen::Vector2d& command);

// w_dyn·||τ_a − τ_p||². Throws ConfigError when w_dyn >= 0.
double DynamicsReward(const Eigen::VectorXd& applied, const Eigen::VectorXd& predicted,
                      double w_dyn);
// α_dyn·||τ_a − τ_p||².
double DynamicsLoss(const Eigen::VectorXd& applied, const Eigen::VectorXd& predicted,
                    double alpha_dyn);

}  // namespace dynaware::reward

#endif  // DYNAWARE_REWARD_REWARD_BANK_H_
