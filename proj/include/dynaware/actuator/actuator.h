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

#ifndef DYNAWARE_ACTUATOR_ACTUATOR_H_
#define DYNAWARE_ACTUATOR_ACTUATOR_H_

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dynaware/nn/checkpoint.h"
#include "dynaware/nn/modules.h"
#include "dynaware/sim/types.h"

namespace dynaware {
class KvConfig;
}

namespace dynaware::actuator {

enum class ActuatorMode { kPd, kLearned };

struct ActuatorConfig {
  double kp = 20.0;            // N·m/rad
  double kd = 0.5;             // N·m·s/rad
  double torque_limit = 25.0;  // N·m
  ActuatorMode mode = ActuatorMode::kPd;
  std::string net_path;        // checkpoint for learned mode

  // Reads "actuator.*" keys.
  static ActuatorConfig FromConfig(const KvConfig& config, double default_torque_limit);
  void Validate() const;
};

ActuatorMode ParseActuatorMode(const std::string& name);
const char* ActuatorModeName(ActuatorMode mode);

// τ_i = clamp(strength_i·(kp·((target_i + offset_i) − q_i) − kd·q̇_i), ±τ_max).
// Throws NumericError on non-finite input and ConfigError on size mismatch.
Eigen::VectorXd PdTorque(const Eigen::VectorXd& target, const Eigen::VectorXd& q,
                         const Eigen::VectorXd& qd, const ActuatorConfig& cfg,
                         const std::vector<double>& strength, const std::vector<double>& offset);

inline constexpr int kDefaultHistoryLength = 3;

// Rolling per-joint history of (position error, joint velocity), newest last.
class ActuatorHistory {
 public:
  ActuatorHistory() = default;
  ActuatorHistory(int n_joints, int length);

  void Reset();
  void Push(const Eigen::VectorXd& position_error, const Eigen::VectorXd& velocity);
  // (2 * length) x n_joints matrix, one column per joint; rows are
  // [err_{t-L+1}, vel_{t-L+1}, ..., err_t, vel_t].
  nn::Matrix Features() const;

  int length() const { return length_; }
  int n_joints() const { return n_joints_; }

 private:
  int n_joints_ = 0;
  int length_ = 0;
  std::deque<Eigen::VectorXd> errors_;
  std::deque<Eigen::VectorXd> velocities_;
};

// Per-joint network shared across joints, history → torque.
class ActuatorNet {
 public:
  static constexpr float kErrorScale = 10.0f;    // 1 / 0.1 rad
  static constexpr float kVelocityScale = 0.1f;  // 1 / 10 rad/s

  ActuatorNet() = default;
  ActuatorNet(int history_length, double torque_limit, std::vector<int> hidden = {32, 32});

  void Initialize(Rng& rng);
  // features: (2 * history_length) x batch raw history columns.
  nn::NodeId Forward(nn::Graph& g, const nn::Matrix& features);
  nn::Matrix Predict(const nn::Matrix& features) const;  // unclamped, N·m
  // Per-joint torques clamped to ±τ_max.
  Eigen::VectorXd Torque(const ActuatorHistory& history) const;
  void CollectParameters(std::vector<nn::Parameter*>& out) { mlp_.CollectParameters(out); }

  int history_length() const { return history_length_; }
  double torque_limit() const { return torque_limit_; }

  nn::Checkpoint ToCheckpoint() const;
  static ActuatorNet FromCheckpoint(const nn::Checkpoint& ckpt);

 private:
  nn::Matrix Scale(const nn::Matrix& features) const;

  int history_length_ = kDefaultHistoryLength;
  double torque_limit_ = 25.0;
  nn::Mlp mlp_;
};

// Samples of (history features, applied torque), one column per sample.
struct ActuatorDataset {
  int history_length = kDefaultHistoryLength;
  nn::Matrix features;     // (2 * history_length) x N
  Eigen::VectorXf torques; // N

  int size() const { return static_cast<int>(torques.size()); }
  void WriteCsv(const std::string& path) const;
  static ActuatorDataset ReadCsv(const std::string& path);
};

// Rolls the simulator under PD control with randomized motor strength and
// smoothly varying random targets, logging one sample per joint per physics
// step.
ActuatorDataset GenerateActuatorDataset(const sim::RobotModel& model, const ActuatorConfig& cfg,
                                        int num_steps, uint64_t seed, int history_length = 3);

struct ActuatorFitConfig {
  int epochs = 30;
  int batch_size = 256;
  float learning_rate = 1e-3f;
  double holdout_fraction = 0.2;
  // Held-out RMSE must fall below this fraction of the held-out torque RMS.
  double max_relative_rmse = 0.1;
};

struct ActuatorFitReport {
  double train_rmse = 0.0;
  double holdout_rmse = 0.0;
  double holdout_torque_rms = 0.0;
  int train_samples = 0;
  int holdout_samples = 0;
  bool meets_threshold = false;
};

inline constexpr int kMinActuatorSamples = 1000;

// Throws TrainingError when the dataset has fewer than 1000 samples.
ActuatorNet FitActuatorNet(const ActuatorDataset& data, double torque_limit,
                           const ActuatorFitConfig& cfg, uint64_t seed,
                           ActuatorFitReport* report = nullptr);

}  // namespace dynaware::actuator

#endif  // DYNAWARE_ACTUATOR_ACTUATOR_H_
