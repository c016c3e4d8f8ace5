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

#ifndef DYNAWARE_LEARNER_ENV_H_
#define DYNAWARE_LEARNER_ENV_H_

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Core>

#include "dynaware/actuator/actuator.h"
#include "dynaware/common/rng.h"
#include "dynaware/reward/reward_bank.h"
#include "dynaware/sim/simulator.h"
#include "dynaware/sim/types.h"

namespace dynaware::learner {

struct EnvConfig {
  sim::RobotModel model = sim::RobotModel::PlanarQuadruped();
  sim::RandomizationSpec randomization;
  actuator::ActuatorConfig actuator;
  reward::RewardConfig reward;
  int episode_length = 1000;     // control steps (20 s)
  double action_scale = 0.25;    // q^d = q_nominal + action_scale * a
  double action_clip = 10.0;     // |a| bound applied before stepping
  double command_range = 0.6;    // |v_cmd| upper bound, m/s
  bool randomize_initial_episode_step = true;
};

// Fixed affine input scaling: x_normalized = (x - shift) .* scale.
struct InputNormalizer {
  Eigen::VectorXf shift;
  Eigen::VectorXf scale;
  static InputNormalizer ForObservation(const sim::RobotModel& model);
  static InputNormalizer ForPrivileged(const sim::RobotModel& model);
};

struct StepResult {
  reward::RewardBreakdown reward;
  Eigen::VectorXd applied_torque;  // mean over the physics substeps
  bool fell = false;
  bool timeout = false;
  bool diverged = false;
  bool done() const { return fell || timeout || diverged; }
};

// One simulated robot with its own RNG streams. Stepping is exclusive to
// whichever worker owns the instance.
class LocomotionEnv {
 public:
  LocomotionEnv(const EnvConfig& config, std::shared_ptr<const sim::TerrainConfig> terrain,
                uint64_t seed, int index,
                std::shared_ptr<const actuator::ActuatorNet> actuator_net = nullptr);

  // Starts the next episode (new physical parameters, spawn, and command).
  void Reset();
  // Applies the raw action for one control step. `predicted_torque` is the ID
  // head output, only used for the dynamics reward.
  StepResult Step(const Eigen::VectorXd& action, const Eigen::VectorXd* predicted_torque);

  // Noisy policy observation of the current state (consumes noise stream).
  Eigen::VectorXf Observe();
  // Noise-free privileged vector of the current state.
  Eigen::VectorXf Privileged() const;

  const sim::RobotState& state() const { return state_; }
  const sim::EpisodeParams& params() const { return params_; }
  const sim::Command& command() const { return command_; }
  void set_command(const sim::Command& command) { command_ = command; }
  const Eigen::VectorXd& prev_action() const { return action_prev_; }
  Eigen::VectorXd Target(const Eigen::VectorXd& action) const;
  int episode_step() const { return episode_step_; }
  int episode_count() const { return episode_; }
  const EnvConfig& config() const { return config_; }
  const sim::TerrainConfig& terrain() const { return *terrain_; }

 private:
  EnvConfig config_;
  std::shared_ptr<const sim::TerrainConfig> terrain_;
  std::shared_ptr<const actuator::ActuatorNet> actuator_net_;
  uint64_t env_seed_;
  Rng noise_rng_;
  Rng command_rng_;
  Rng start_rng_;
  sim::RobotState state_;
  sim::EpisodeParams params_;
  sim::Command command_;
  actuator::ActuatorHistory actuator_history_;
  Eigen::VectorXd nominal_;
  Eigen::VectorXd action_prev_, action_prev2_;
  int episode_ = 0;
  int episode_step_ = 0;
  bool first_episode_ = true;
};

}  // namespace dynaware::learner

#endif  // DYNAWARE_LEARNER_ENV_H_
