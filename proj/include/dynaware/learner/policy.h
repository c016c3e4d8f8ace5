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

#ifndef DYNAWARE_LEARNER_POLICY_H_
#define DYNAWARE_LEARNER_POLICY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dynaware/learner/env.h"
#include "dynaware/nn/checkpoint.h"
#include "dynaware/nn/graph.h"
#include "dynaware/nn/modules.h"

namespace dynaware::learner {

struct PolicyDims {
  int obs_dim = 0;
  int privileged_dim = 0;
  int latent_dim = 8;
  int action_dim = 0;
  int torque_dim = 0;  // 0 without an ID head, action_dim with one

  static PolicyDims ForModel(const sim::RobotModel& model, bool id_head, int latent_dim = 8);
  void Validate() const;
};

struct PolicyNodes {
  nn::NodeId latent = -1;
  nn::NodeId action_mean = -1;
  nn::NodeId torque = -1;  // -1 without an ID head
  nn::NodeId trunk = -1;
};

// Privileged encoder, shared trunk, action head, optional ID (torque) head,
// and a state-independent Gaussian log-std. The action and ID heads read the
// same trunk features and differ only in their output layers.
class TeacherPolicy {
 public:
  TeacherPolicy() = default;
  TeacherPolicy(const PolicyDims& dims, InputNormalizer obs_norm, InputNormalizer priv_norm);

  // Each part draws from its own substream of `seed`, so adding or removing
  // the ID head leaves every other initial weight unchanged.
  void Initialize(uint64_t seed, float init_std);

  // Inference; inputs are raw (unnormalized) column batches.
  nn::Matrix Latent(const nn::Matrix& privileged) const;
  nn::Matrix TrunkFeatures(const nn::Matrix& obs, const nn::Matrix& latent) const;
  nn::Matrix ActionMean(const nn::Matrix& obs, const nn::Matrix& latent) const;
  // ID head output; throws UsageError when there is no head.
  nn::Matrix PredictTorque(const nn::Matrix& trunk_features) const;
  nn::Matrix ActionFromTrunk(const nn::Matrix& trunk_features) const;

  // Graph construction for training.
  nn::NodeId NormalizedObs(nn::Graph& g, const nn::Matrix& obs) const;
  nn::NodeId EncodeLatent(nn::Graph& g, const nn::Matrix& privileged);
  PolicyNodes ForwardFromLatent(nn::Graph& g, nn::NodeId obs_normalized, nn::NodeId latent);

  bool has_id_head() const { return dims_.torque_dim > 0; }
  // Copy of this policy with the ID head removed.
  TeacherPolicy WithoutIdHead() const;

  const PolicyDims& dims() const { return dims_; }
  const InputNormalizer& obs_normalizer() const { return obs_norm_; }
  const InputNormalizer& priv_normalizer() const { return priv_norm_; }
  nn::Parameter& log_std() { return log_std_; }
  const nn::Parameter& log_std() const { return log_std_; }
  Eigen::VectorXf Std() const { return log_std_.value.col(0).array().exp(); }

  // Trunk, heads, and log-std (θ_p, θ_d).
  void PolicyParameters(std::vector<nn::Parameter*>& out);
  void PolicyParameters(std::vector<const nn::Parameter*>& out) const;
  void EncoderParameters(std::vector<nn::Parameter*>& out);
  void EncoderParameters(std::vector<const nn::Parameter*>& out) const;
  // CRC-32 over trunk, heads, and log-std values.
  uint32_t PolicyChecksum() const;

  void AddToCheckpoint(nn::Checkpoint& ckpt) const;
  static TeacherPolicy FromCheckpoint(const nn::Checkpoint& ckpt);

 private:
  PolicyDims dims_;
  InputNormalizer obs_norm_;
  InputNormalizer priv_norm_;
  nn::Mlp encoder_;
  nn::Mlp trunk_;  // hidden layers only; its "output" layer is the last hidden
  nn::LinearLayer action_head_;
  std::optional<nn::LinearLayer> torque_head_;
  nn::Parameter log_std_;
};

// Value function on [o_t, l_t].
class Critic {
 public:
  Critic() = default;
  Critic(int obs_dim, int latent_dim);
  void Initialize(uint64_t seed);
  nn::Matrix Value(const nn::Matrix& obs_normalized, const nn::Matrix& latent) const;
  nn::NodeId Forward(nn::Graph& g, nn::NodeId obs_normalized, nn::NodeId latent);
  void CollectParameters(std::vector<nn::Parameter*>& out) { mlp_.CollectParameters(out); }
  void AddToCheckpoint(nn::Checkpoint& ckpt) const;
  void LoadFromCheckpoint(const nn::Checkpoint& ckpt);

 private:
  nn::Mlp mlp_;
};

// Diagonal Gaussian log-density of each column of `actions`.
Eigen::VectorXf GaussianLogProb(const nn::Matrix& actions, const nn::Matrix& mean,
                                const Eigen::VectorXf& log_std);
float GaussianEntropy(const Eigen::VectorXf& log_std);

}  // namespace dynaware::learner

#endif  // DYNAWARE_LEARNER_POLICY_H_
