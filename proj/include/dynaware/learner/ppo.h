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

#ifndef DYNAWARE_LEARNER_PPO_H_
#define DYNAWARE_LEARNER_PPO_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynaware/learner/env.h"
#include "dynaware/learner/policy.h"
#include "dynaware/nn/optimizer.h"
#include "dynaware/reward/reward_bank.h"

namespace dynaware {
class KvConfig;
}

namespace dynaware::learner {

enum class IdHeadMode { kOff, kRewardOnly, kRewardPlusAux };

IdHeadMode ParseIdHeadMode(const std::string& name);
const char* IdHeadModeName(IdHeadMode mode);

// How a fall is treated in the return: as an absorbing state that keeps
// paying its last reward, or as a plain terminal state worth zero.
enum class FallBootstrap { kAbsorbing, kZero };

struct TrainConfig {
  int num_envs = 64;
  int horizon = 48;
  int epochs = 4;
  int minibatches = 4;
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.0;
  double learning_rate = 3e-4;
  double max_grad_norm = 1.0;
  double desired_kl = 0.0;  // > 0 enables KL-adaptive learning rate
  double init_std = 1.0;
  int latent_dim = 8;
  int iterations = 1500;
  int checkpoint_every = 250;
  IdHeadMode id_mode = IdHeadMode::kRewardPlusAux;
  double alpha_dyn = 3e-4;
  double w_dyn = -1e-2;
  FallBootstrap fall_bootstrap = FallBootstrap::kAbsorbing;
  sim::TerrainKind terrain_kind = sim::TerrainKind::kFlat;
  int terrain_level = 0;
  EnvConfig env;

  bool id_head() const { return id_mode != IdHeadMode::kOff; }
  // Resets alpha_dyn and w_dyn to the defaults of the current id_mode.
  void ApplyModeDefaults();
  // Reads "train.*", "env.*", "terrain.*", "model.*", "randomization.*",
  // "actuator.*" and "reward.*" keys on top of the defaults.
  static TrainConfig FromConfig(const KvConfig& config);
  // Syncs derived fields (reward dynamics switch, w_dyn) and checks ranges.
  void Finalize();
  void Validate() const;
  nlohmann::json ToJson() const;
};

// Samples are stored step-major: column t * num_envs + e.
struct RolloutBuffer {
  int horizon = 0;
  int num_envs = 0;
  nn::Matrix obs;
  nn::Matrix privileged;
  nn::Matrix actions;
  Eigen::VectorXf log_probs;
  Eigen::VectorXf values;
  Eigen::VectorXf rewards;       // learning reward incl. bootstrap terms
  Eigen::VectorXf dones;         // 1 when the episode ended after this step
  nn::Matrix components;         // weighted reward components + dynamics row
  nn::Matrix applied_torque;
  nn::Matrix predicted_torque;   // empty without an ID head
  Eigen::VectorXf last_values;   // V(s_T) per env
  Eigen::VectorXf advantages;
  Eigen::VectorXf returns;

  int size() const { return horizon * num_envs; }
  void Allocate(int horizon, int num_envs, const PolicyDims& dims);
};

struct EpisodeStats {
  int completed = 0;
  int falls = 0;
  int diverged = 0;
  double length_sum = 0.0;
  double return_sum = 0.0;
};

// Steps every env `horizon` times. Action noise for env e comes from
// noise_rngs[e]; with `deterministic` the mean action is applied.
class RolloutCollector {
 public:
  RolloutCollector(std::vector<LocomotionEnv>* envs, std::vector<Rng>* noise_rngs)
      : envs_(envs), noise_rngs_(noise_rngs) {}

  EpisodeStats Collect(const TeacherPolicy& policy, const Critic& critic, const TrainConfig& cfg,
                       RolloutBuffer& buffer, bool deterministic = false);

 private:
  std::vector<LocomotionEnv>* envs_;
  std::vector<Rng>* noise_rngs_;
  nn::Matrix current_obs_;
  std::vector<double> episode_returns_;
  bool started_ = false;
};

// Single-sequence GAE with bootstrap value for the step after the last.
void ComputeGae(std::span<const float> rewards, std::span<const float> values,
                std::span<const float> dones, float bootstrap, double gamma, double lambda,
                std::span<float> advantages, std::span<float> returns);
// Batched over the buffer's envs; fills advantages and returns.
void ComputeGae(RolloutBuffer& buffer, double gamma, double lambda);
// Normalizes to zero mean, unit (population) standard deviation.
void NormalizeAdvantages(Eigen::VectorXf& advantages);

struct MinibatchStats {
  double surrogate = 0.0;     // −mean(min(r·A, clip(r)·A))
  double value_term = 0.0;    // value_coef·mean((V − R)²)
  double entropy_term = 0.0;  // −entropy_coef·H
  double dyn_term = 0.0;      // α_dyn·mean(||τ_a − τ_p||²)
  double total = 0.0;
  double mean_ratio = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  double dyn_mse = 0.0;       // mean(||τ_a − τ_p||²)
  bool skipped = false;
};

struct UpdateStats {
  std::vector<MinibatchStats> minibatches;
  double surrogate = 0.0, value_term = 0.0, entropy_term = 0.0, dyn_term = 0.0, total = 0.0;
  double approx_kl = 0.0, clip_fraction = 0.0, dyn_mse = 0.0;
  double max_audit_error = 0.0;  // max |total − Σ terms| across minibatches
  int aborted_epochs = 0;
  int skipped_steps = 0;
  double learning_rate = 0.0;
};

// Trainable state of a teacher run.
struct TeacherModel {
  TeacherPolicy policy;
  Critic critic;
  nn::Adam optimizer;

  void Build(const TrainConfig& cfg, uint64_t seed);
  std::vector<nn::Parameter*> TrainableParameters();
};

// Clipped-surrogate PPO update with value, entropy, and dynamics-loss terms.
UpdateStats PpoUpdate(TeacherModel& model, RolloutBuffer& buffer, const TrainConfig& cfg,
                      Rng& rng);

struct IterationLog {
  int iteration = 0;
  std::array<double, reward::kNumComponents> components{};
  double dynamics = 0.0;
  UpdateStats update;
  EpisodeStats episodes;
  double action_std = 0.0;
};

// CSV header of the training log; the Dynamics column exists only when the
// dynamics reward is enabled.
std::string TrainingLogHeader(bool dynamics_enabled);
std::string TrainingLogRow(const IterationLog& log, bool dynamics_enabled);

struct TrainOptions {
  std::string out_dir;  // empty: no files
  std::function<void(const IterationLog&)> on_iteration;
};

struct TrainResult {
  std::unique_ptr<TeacherModel> model;
  std::vector<IterationLog> log;
};

nn::Checkpoint TeacherCheckpoint(const TeacherModel& model, const TrainConfig& cfg, uint64_t seed,
                                 int iteration);

// collect → GAE → update, `cfg.iterations` times. Throws NumericError with
// iteration context on fatal numeric failure.
TrainResult TrainTeacher(const TrainConfig& cfg, uint64_t seed, const TrainOptions& options = {});

// Envs and per-env action-noise streams for a run.
std::vector<LocomotionEnv> MakeEnvs(const TrainConfig& cfg, uint64_t seed,
                                    std::shared_ptr<const sim::TerrainConfig> terrain,
                                    std::shared_ptr<const actuator::ActuatorNet> net);
std::vector<Rng> MakeNoiseStreams(int count, uint64_t seed);
std::shared_ptr<const actuator::ActuatorNet> LoadActuatorNet(const actuator::ActuatorConfig& cfg);

}  // namespace dynaware::learner

#endif  // DYNAWARE_LEARNER_PPO_H_
