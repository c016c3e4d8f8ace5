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

#include "dynaware/reward/reward_bank.h"

#include <cmath>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"

namespace dynaware::reward {

namespace {

constexpr std::array<const char*, kNumComponents> kKeys = {
    "linear_velocity", "angular_velocity", "orientation",  "z_velocity",
    "roll_pitch_velocity", "base_height",  "collision",    "foot_slip",
    "torque",          "dof_pos_limits",   "dof_velocity", "dof_acceleration",
    "power",           "action_rate",      "smoothness_1", "smoothness_2"};

void CheckSize(const Eigen::VectorXd& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw ConfigError(std::string("ComputeRewards: '") + what + "' has " +
                      std::to_string(v.size()) + " entries, expected " + std::to_string(n));
  }
}

}  // namespace

const char* ComponentKey(int component) { return kKeys.at(component); }

RewardConfig RewardConfig::FromConfig(const KvConfig& config) {
  RewardConfig cfg;
  cfg.dt = config.GetDouble("reward.dt", cfg.dt);
  for (int i = 0; i < kNumComponents; ++i) {
    cfg.coefficients[i] =
        config.GetDouble(std::string("reward.") + kKeys[i], cfg.coefficients[i]);
  }
  cfg.sigma_v = config.GetDouble("reward.sigma_v", cfg.sigma_v);
  cfg.sigma_omega = config.GetDouble("reward.sigma_omega", cfg.sigma_omega);
  cfg.lin_vel_threshold = config.GetDouble("reward.lin_vel_threshold", cfg.lin_vel_threshold);
  cfg.collision_threshold =
      config.GetDouble("reward.collision_threshold", cfg.collision_threshold);
  cfg.Validate();
  return cfg;
}

void RewardConfig::Validate() const {
  if (!(dt > 0.0)) throw ConfigError("reward: dt must be > 0");
  if (!(sigma_v > 0.0) || !(sigma_omega > 0.0)) {
    throw ConfigError("reward: tracking widths must be > 0");
  }
  for (int i = 0; i < kNumComponents; ++i) {
    const bool tracking = i == kLinearVelocity || i == kAngularVelocity;
    if (tracking ? coefficients[i] < 0.0 : coefficients[i] > 0.0) {
      throw ConfigError(std::string("reward: coefficient '") + kKeys[i] + "' has the wrong sign");
    }
  }
  if (dynamics_enabled && !(w_dyn < 0.0)) {
    throw ConfigError("reward: w_dyn must be < 0 (the dynamics reward is a penalty)");
  }
}

double ProjectedCommandVelocity(double velocity, double command) {
  if (command == 0.0) return -std::abs(velocity);
  return command > 0.0 ? velocity : -velocity;
}

double ProjectedCommandVelocity(const Eigen::Vector2d& velocity, const Eigen::Vector2d& command) {
  const double norm = command.norm();
  if (norm == 0.0) return -velocity.norm();
  return velocity.dot(command / norm);
}

double DynamicsReward(const Eigen::VectorXd& applied, const Eigen::VectorXd& predicted,
                      double w_dyn) {
  if (!(w_dyn < 0.0)) throw ConfigError("DynamicsReward: w_dyn must be < 0");
  if (applied.size() != predicted.size()) {
    throw ConfigError("DynamicsReward: torque dimension mismatch");
  }
  return w_dyn * (applied - predicted).squaredNorm();
}

double DynamicsLoss(const Eigen::VectorXd& applied, const Eigen::VectorXd& predicted,
                    double alpha_dyn) {
  if (applied.size() != predicted.size()) {
    throw ConfigError("DynamicsLoss: torque dimension mismatch");
  }
  return alpha_dyn * (applied - predicted).squaredNorm();
}

RewardBreakdown ComputeRewards(const RewardInputs& in, const RewardConfig& cfg) {
  const Eigen::Index n = in.q.size();
  CheckSize(in.qd, n, "qd");
  CheckSize(in.qd_prev, n, "qd_prev");
  CheckSize(in.q_lower, n, "q_lower");
  CheckSize(in.q_upper, n, "q_upper");
  CheckSize(in.action, n, "action");
  CheckSize(in.action_prev, n, "action_prev");
  CheckSize(in.action_prev2, n, "action_prev2");
  CheckSize(in.target, n, "target");
  CheckSize(in.target_prev, n, "target_prev");
  CheckSize(in.target_prev2, n, "target_prev2");
  CheckSize(in.applied_torque, n, "applied_torque");

  RewardBreakdown out;
  auto& r = out.raw;

  const double v_pr = ProjectedCommandVelocity(in.forward_velocity, in.command.lin_vel);
  r[kLinearVelocity] =
      v_pr < cfg.lin_vel_threshold
          ? std::exp(-(v_pr - cfg.lin_vel_threshold) * (v_pr - cfg.lin_vel_threshold) /
                     cfg.sigma_v)
          : 1.0;
  const double dw = in.command.ang_vel - in.yaw_rate;
  r[kAngularVelocity] = std::exp(-dw * dw / cfg.sigma_omega);

  // Horizontal component of the projected gravity vector.
  const double gx = -std::sin(in.pitch);
  r[kOrientation] = gx * gx;
  r[kZVelocity] = in.vertical_velocity * in.vertical_velocity;
  r[kRollPitchVelocity] = in.pitch_rate * in.pitch_rate;
  r[kBaseHeight] = (in.base_height - in.h_target) * (in.base_height - in.h_target);

  double collisions = 0.0;
  for (double f : in.collision_force) {
    if (f > cfg.collision_threshold) collisions += 1.0;
  }
  r[kCollision] = collisions;

  double slip = 0.0;
  for (int i = 0; i < sim::kNumLegs; ++i) {
    if (in.foot_contact[i]) slip += in.foot_velocity[i] * in.foot_velocity[i];
  }
  r[kFootSlip] = slip;

  r[kTorque] = in.applied_torque.squaredNorm();
  r[kDofPosLimits] = (in.q - in.q_upper).cwiseMax(0.0).sum() +
                     (in.q_lower - in.q).cwiseMax(0.0).sum();
  r[kDofVelocity] = in.qd.squaredNorm();
  r[kDofAcceleration] = ((in.qd_prev - in.qd) / cfg.dt).squaredNorm();
  r[kPower] = in.applied_torque.cwiseProduct(in.qd).cwiseAbs().sum();
  r[kActionRate] = (in.action_prev - in.action).squaredNorm();
  r[kSmoothness1] = (in.target - in.target_prev).squaredNorm();
  r[kSmoothness2] = (in.target - 2.0 * in.target_prev + in.target_prev2).squaredNorm();

  double total = 0.0;
  for (int i = 0; i < kNumComponents; ++i) {
    if (!std::isfinite(r[i])) {
      throw NumericError(std::string("reward component '") + kComponentNames[i] +
                         "' is not finite");
    }
    out.weighted[i] = cfg.weight(i) * r[i];
    total += out.weighted[i];
  }
  if (cfg.dynamics_enabled) {
    CheckSize(in.predicted_torque, n, "predicted_torque");
    out.dynamics = DynamicsReward(in.applied_torque, in.predicted_torque, cfg.w_dyn);
    total += out.dynamics;
  }
  out.total = total;
  return out;
}

}  // namespace dynaware::reward
