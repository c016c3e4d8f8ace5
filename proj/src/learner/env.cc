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

#include "dynaware/learner/env.h"

#include <algorithm>
#include <cmath>

#include "dynaware/common/error.h"

namespace dynaware::learner {

InputNormalizer InputNormalizer::ForObservation(const sim::RobotModel& model) {
  const int n = model.n_joints;
  InputNormalizer norm;
  norm.shift = Eigen::VectorXf::Zero(sim::Observation::Dim(n));
  norm.scale = Eigen::VectorXf::Ones(sim::Observation::Dim(n));
  for (int j = 0; j < n; ++j) {
    norm.shift[j] = static_cast<float>(model.q_nominal[j]);
    norm.scale[n + j] = 0.05f;
  }
  norm.scale[3 * n + 2] = 2.0f;
  norm.scale[3 * n + 3] = 2.0f;
  return norm;
}

InputNormalizer InputNormalizer::ForPrivileged(const sim::RobotModel& model) {
  const int n = model.n_joints;
  const int dim = sim::PrivilegedState::Dim(n);
  InputNormalizer norm;
  norm.shift = Eigen::VectorXf::Zero(dim);
  norm.scale = Eigen::VectorXf::Ones(dim);
  const float weight = static_cast<float>(model.TotalMass() * model.gravity);
  int i = 0;
  norm.scale[i++] = 2.0f;   // vx
  norm.scale[i++] = 2.0f;   // vz
  norm.scale[i++] = 0.25f;  // pitch rate
  norm.scale[i++] = 10.0f;  // com displacement
  i += sim::kNumLegs;       // contact flags
  for (int k = 0; k < 2 * sim::kNumLegs + sim::kNumLegs; ++k) norm.scale[i++] = 4.0f / weight;
  norm.shift[i] = 1.0f;     // friction
  norm.scale[i++] = 0.5f;
  norm.shift[i] = 0.2f;     // restitution
  norm.scale[i++] = 5.0f;
  for (int k = 0; k < 4 * sim::kNumLegs; ++k) norm.scale[i++] = 10.0f;
  for (int j = 0; j < n; ++j) {
    norm.shift[i] = 1.0f;
    norm.scale[i++] = 10.0f;
  }
  return norm;
}

LocomotionEnv::LocomotionEnv(const EnvConfig& config,
                             std::shared_ptr<const sim::TerrainConfig> terrain, uint64_t seed,
                             int index, std::shared_ptr<const actuator::ActuatorNet> actuator_net)
    : config_(config),
      terrain_(std::move(terrain)),
      actuator_net_(std::move(actuator_net)),
      env_seed_(DeriveSeed(seed, "env", static_cast<uint64_t>(index))),
      noise_rng_(DeriveSeed(seed, "noise", static_cast<uint64_t>(index))),
      command_rng_(DeriveSeed(seed, "command", static_cast<uint64_t>(index))),
      start_rng_(DeriveSeed(seed, "episode_start", static_cast<uint64_t>(index))) {
  const int n = config_.model.n_joints;
  if (config_.actuator.mode == actuator::ActuatorMode::kLearned) {
    if (!actuator_net_) throw ConfigError("learned actuator mode requires an actuator network");
    actuator_history_ = actuator::ActuatorHistory(n, actuator_net_->history_length());
  }
  nominal_ = Eigen::Map<const Eigen::VectorXd>(config_.model.q_nominal.data(), n);
  Reset();
}

void LocomotionEnv::Reset() {
  const int n = config_.model.n_joints;
  sim::ResetResult r = sim::Reset(config_.model, config_.randomization, *terrain_,
                                  DeriveSeed(env_seed_, "episode", static_cast<uint64_t>(episode_)));
  state_ = std::move(r.state);
  params_ = std::move(r.params);
  command_.lin_vel = command_rng_.Uniform(-config_.command_range, config_.command_range);
  command_.ang_vel = 0.0;
  action_prev_ = Eigen::VectorXd::Zero(n);
  action_prev2_ = Eigen::VectorXd::Zero(n);
  if (actuator_history_.n_joints() > 0) actuator_history_.Reset();
  episode_step_ = 0;
  if (first_episode_ && config_.randomize_initial_episode_step) {
    episode_step_ = static_cast<int>(start_rng_.Index(static_cast<uint64_t>(config_.episode_length)));
  }
  first_episode_ = false;
  ++episode_;
}

Eigen::VectorXd LocomotionEnv::Target(const Eigen::VectorXd& action) const {
  return nominal_ + config_.action_scale * action;
}

Eigen::VectorXf LocomotionEnv::Observe() {
  return sim::AssembleObservation(config_.model, state_, action_prev_, command_,
                                  config_.randomization, noise_rng_)
      .Flatten();
}

Eigen::VectorXf LocomotionEnv::Privileged() const {
  return sim::AssemblePrivileged(config_.model, state_, params_, *terrain_).Flatten();
}

StepResult LocomotionEnv::Step(const Eigen::VectorXd& raw_action,
                               const Eigen::VectorXd* predicted_torque) {
  const sim::RobotModel& model = config_.model;
  const int n = model.n_joints;
  if (raw_action.size() != n) throw ConfigError("LocomotionEnv::Step: action dimension mismatch");
  if (!raw_action.allFinite()) throw NumericError("LocomotionEnv::Step: non-finite action");
  const Eigen::VectorXd action =
      raw_action.cwiseMax(-config_.action_clip).cwiseMin(config_.action_clip);
  const Eigen::VectorXd target = Target(action);
  const Eigen::VectorXd qd_prev = state_.joint_velocities();

  StepResult result;
  result.applied_torque = Eigen::VectorXd::Zero(n);
  std::vector<double> tau(n);
  try {
    for (int sub = 0; sub < sim::kControlDecimation; ++sub) {
      const Eigen::VectorXd q = state_.joint_positions();
      const Eigen::VectorXd qd = state_.joint_velocities();
      Eigen::VectorXd t;
      if (config_.actuator.mode == actuator::ActuatorMode::kLearned) {
        Eigen::VectorXd err(n);
        for (int j = 0; j < n; ++j) err[j] = target[j] + params_.motor_offset[j] - q[j];
        actuator_history_.Push(err, qd);
        t = actuator_net_->Torque(actuator_history_);
        for (int j = 0; j < n; ++j) {
          t[j] = std::clamp(t[j] * params_.motor_strength[j], -config_.actuator.torque_limit,
                            config_.actuator.torque_limit);
        }
      } else {
        t = actuator::PdTorque(target, q, qd, config_.actuator, params_.motor_strength,
                               params_.motor_offset);
      }
      for (int j = 0; j < n; ++j) tau[j] = t[j];
      result.applied_torque += t;
      state_ = sim::StepPhysics(model, state_, tau, params_, *terrain_, sim::kPhysicsDt);
    }
  } catch (const NumericError&) {
    result.diverged = true;
  }
  result.applied_torque /= sim::kControlDecimation;

  if (!result.diverged) {
    reward::RewardInputs in;
    const double c = std::cos(state_.pitch()), s = std::sin(state_.pitch());
    in.forward_velocity = c * state_.base_vx() + s * state_.base_vz();
    in.vertical_velocity = -s * state_.base_vx() + c * state_.base_vz();
    in.pitch = state_.pitch();
    in.pitch_rate = state_.pitch_rate();
    in.base_height = sim::BaseHeight(state_, *terrain_);
    in.h_target = model.h_target;
    in.q = state_.joint_positions();
    in.qd = state_.joint_velocities();
    in.qd_prev = qd_prev;
    in.q_lower = Eigen::Map<const Eigen::VectorXd>(model.q_lower.data(), n);
    in.q_upper = Eigen::Map<const Eigen::VectorXd>(model.q_upper.data(), n);
    in.foot_contact = state_.foot_contact;
    in.foot_velocity = state_.foot_velocity_x;
    in.collision_force.assign(state_.collision_force.begin(), state_.collision_force.end());
    in.action = action;
    in.action_prev = action_prev_;
    in.action_prev2 = action_prev2_;
    in.target = target;
    in.target_prev = Target(action_prev_);
    in.target_prev2 = Target(action_prev2_);
    in.applied_torque = result.applied_torque;
    if (predicted_torque) in.predicted_torque = *predicted_torque;
    in.command = command_;
    result.reward = reward::ComputeRewards(in, config_.reward);
    result.fell = sim::HasFallen(model, state_, *terrain_);
  }
  action_prev2_ = action_prev_;
  action_prev_ = action;
  ++episode_step_;
  result.timeout = !result.done() && episode_step_ >= config_.episode_length;
  return result;
}

}  // namespace dynaware::learner
