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

#include "dynaware/learner/policy.h"

#include <cmath>

#include "dynaware/common/error.h"
#include "dynaware/common/rng.h"

namespace dynaware::learner {

namespace {

constexpr float kHiddenGain = 1.41421356f;
constexpr float kOutputGain = 0.01f;
constexpr float kLogSqrt2Pi = 0.91893853f;

nn::Matrix NormalizeColumns(const nn::Matrix& x, const InputNormalizer& norm) {
  if (x.rows() != norm.shift.size()) {
    throw ConfigError("policy input has " + std::to_string(x.rows()) + " features, expected " +
                      std::to_string(norm.shift.size()));
  }
  return ((x.colwise() - norm.shift).array().colwise() * norm.scale.array()).matrix();
}

void PutVector(nlohmann::json& j, const char* key, const Eigen::VectorXf& v) {
  j[key] = std::vector<float>(v.data(), v.data() + v.size());
}

Eigen::VectorXf GetVector(const nlohmann::json& j, const char* key) {
  const auto values = j.at(key).get<std::vector<float>>();
  return Eigen::Map<const Eigen::VectorXf>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

PolicyDims PolicyDims::ForModel(const sim::RobotModel& model, bool id_head, int latent_dim) {
  PolicyDims d;
  d.obs_dim = sim::Observation::Dim(model.n_joints);
  d.privileged_dim = sim::PrivilegedState::Dim(model.n_joints);
  d.latent_dim = latent_dim;
  d.action_dim = model.n_joints;
  d.torque_dim = id_head ? model.n_joints : 0;
  return d;
}

void PolicyDims::Validate() const {
  if (obs_dim <= 0 || privileged_dim <= 0 || latent_dim <= 0 || action_dim <= 0) {
    throw ConfigError("policy dimensions must be positive");
  }
  if (torque_dim != 0 && torque_dim != action_dim) {
    throw ConfigError("ID head width must equal the action dimension");
  }
}

TeacherPolicy::TeacherPolicy(const PolicyDims& dims, InputNormalizer obs_norm,
                             InputNormalizer priv_norm)
    : dims_(dims), obs_norm_(std::move(obs_norm)), priv_norm_(std::move(priv_norm)) {
  dims_.Validate();
  if (obs_norm_.shift.size() != dims.obs_dim || priv_norm_.shift.size() != dims.privileged_dim) {
    throw ConfigError("normalizer size does not match policy dimensions");
  }
  encoder_ = nn::Mlp(nn::MlpSpec::Adaptation(dims.privileged_dim, dims.latent_dim), "encoder");
  const nn::MlpSpec full =
      nn::MlpSpec::Policy(dims.obs_dim, dims.latent_dim, dims.action_dim, dims.torque_dim);
  // Trunk = hidden layers; the output layer is split into the two heads.
  nn::MlpSpec trunk{full.input_dim, {full.hidden.begin(), full.hidden.end() - 1},
                    full.hidden.back()};
  trunk_ = nn::Mlp(trunk, "policy.trunk");
  action_head_ = nn::LinearLayer("policy.action_head", full.hidden.back(), dims.action_dim);
  if (dims.torque_dim > 0) {
    torque_head_.emplace("policy.id_head", full.hidden.back(), dims.torque_dim);
  }
  log_std_ = nn::Parameter("policy.log_std", dims.action_dim, 1);
}

void TeacherPolicy::Initialize(uint64_t seed, float init_std) {
  Rng enc_rng(DeriveSeed(seed, "init.encoder"));
  encoder_.Initialize(enc_rng, kHiddenGain, kOutputGain);
  Rng trunk_rng(DeriveSeed(seed, "init.trunk"));
  // Every trunk layer is hidden (followed by ELU).
  trunk_.Initialize(trunk_rng, kHiddenGain, kHiddenGain);
  Rng action_rng(DeriveSeed(seed, "init.action_head"));
  action_head_.Initialize(kOutputGain, action_rng);
  if (torque_head_) {
    Rng id_rng(DeriveSeed(seed, "init.id_head"));
    torque_head_->Initialize(kOutputGain, id_rng);
  }
  log_std_.value.setConstant(std::log(init_std));
  log_std_.MarkUpdated();
}

nn::Matrix TeacherPolicy::Latent(const nn::Matrix& privileged) const {
  return encoder_.Apply(NormalizeColumns(privileged, priv_norm_));
}

nn::Matrix TeacherPolicy::TrunkFeatures(const nn::Matrix& obs, const nn::Matrix& latent) const {
  if (latent.rows() != dims_.latent_dim || latent.cols() != obs.cols()) {
    throw ConfigError("latent batch does not match observation batch");
  }
  nn::Matrix x(dims_.obs_dim + dims_.latent_dim, obs.cols());
  x << NormalizeColumns(obs, obs_norm_), latent;
  return nn::EluApply(trunk_.Apply(x));
}

nn::Matrix TeacherPolicy::ActionFromTrunk(const nn::Matrix& trunk_features) const {
  return action_head_.Apply(trunk_features);
}

nn::Matrix TeacherPolicy::ActionMean(const nn::Matrix& obs, const nn::Matrix& latent) const {
  return ActionFromTrunk(TrunkFeatures(obs, latent));
}

nn::Matrix TeacherPolicy::PredictTorque(const nn::Matrix& trunk_features) const {
  if (!torque_head_) throw UsageError("policy has no ID head");
  return torque_head_->Apply(trunk_features);
}

nn::NodeId TeacherPolicy::NormalizedObs(nn::Graph& g, const nn::Matrix& obs) const {
  return g.Input(NormalizeColumns(obs, obs_norm_), false);
}

nn::NodeId TeacherPolicy::EncodeLatent(nn::Graph& g, const nn::Matrix& privileged) {
  return encoder_.Forward(g, g.Input(NormalizeColumns(privileged, priv_norm_), false));
}

PolicyNodes TeacherPolicy::ForwardFromLatent(nn::Graph& g, nn::NodeId obs_normalized,
                                             nn::NodeId latent) {
  PolicyNodes nodes;
  nodes.latent = latent;
  nodes.trunk = g.Elu(trunk_.Forward(g, g.Concat(obs_normalized, latent)));
  nodes.action_mean = action_head_.Forward(g, nodes.trunk);
  if (torque_head_) nodes.torque = torque_head_->Forward(g, nodes.trunk);
  return nodes;
}

TeacherPolicy TeacherPolicy::WithoutIdHead() const {
  TeacherPolicy copy = *this;
  copy.torque_head_.reset();
  copy.dims_.torque_dim = 0;
  return copy;
}

void TeacherPolicy::PolicyParameters(std::vector<nn::Parameter*>& out) {
  trunk_.CollectParameters(out);
  action_head_.CollectParameters(out);
  if (torque_head_) torque_head_->CollectParameters(out);
  out.push_back(&log_std_);
}

void TeacherPolicy::PolicyParameters(std::vector<const nn::Parameter*>& out) const {
  trunk_.CollectParameters(out);
  action_head_.CollectParameters(out);
  if (torque_head_) torque_head_->CollectParameters(out);
  out.push_back(&log_std_);
}

void TeacherPolicy::EncoderParameters(std::vector<nn::Parameter*>& out) {
  encoder_.CollectParameters(out);
}

void TeacherPolicy::EncoderParameters(std::vector<const nn::Parameter*>& out) const {
  encoder_.CollectParameters(out);
}

uint32_t TeacherPolicy::PolicyChecksum() const {
  std::vector<const nn::Parameter*> params;
  PolicyParameters(params);
  return nn::ParameterChecksum(params);
}

void TeacherPolicy::AddToCheckpoint(nn::Checkpoint& ckpt) const {
  nlohmann::json& m = ckpt.meta["policy"];
  m["obs_dim"] = dims_.obs_dim;
  m["privileged_dim"] = dims_.privileged_dim;
  m["latent_dim"] = dims_.latent_dim;
  m["action_dim"] = dims_.action_dim;
  m["torque_dim"] = dims_.torque_dim;
  PutVector(m, "obs_shift", obs_norm_.shift);
  PutVector(m, "obs_scale", obs_norm_.scale);
  PutVector(m, "priv_shift", priv_norm_.shift);
  PutVector(m, "priv_scale", priv_norm_.scale);
  std::vector<const nn::Parameter*> params;
  EncoderParameters(params);
  PolicyParameters(params);
  for (const nn::Parameter* p : params) ckpt.Add(p->name, p->value);
}

TeacherPolicy TeacherPolicy::FromCheckpoint(const nn::Checkpoint& ckpt) {
  if (!ckpt.meta.contains("policy")) throw ConfigError("checkpoint holds no policy");
  const nlohmann::json& m = ckpt.meta.at("policy");
  PolicyDims dims;
  dims.obs_dim = m.at("obs_dim").get<int>();
  dims.privileged_dim = m.at("privileged_dim").get<int>();
  dims.latent_dim = m.at("latent_dim").get<int>();
  dims.action_dim = m.at("action_dim").get<int>();
  dims.torque_dim = m.at("torque_dim").get<int>();
  InputNormalizer obs{GetVector(m, "obs_shift"), GetVector(m, "obs_scale")};
  InputNormalizer priv{GetVector(m, "priv_shift"), GetVector(m, "priv_scale")};
  TeacherPolicy policy(dims, obs, priv);
  std::vector<nn::Parameter*> params;
  policy.EncoderParameters(params);
  policy.PolicyParameters(params);
  nn::LoadParameters(ckpt, params);
  return policy;
}

Critic::Critic(int obs_dim, int latent_dim)
    : mlp_(nn::MlpSpec{obs_dim + latent_dim, {512, 256, 128}, 1}, "critic") {}

void Critic::Initialize(uint64_t seed) {
  Rng rng(DeriveSeed(seed, "init.critic"));
  mlp_.Initialize(rng, kHiddenGain, 1.0f);
}

nn::Matrix Critic::Value(const nn::Matrix& obs_normalized, const nn::Matrix& latent) const {
  nn::Matrix x(obs_normalized.rows() + latent.rows(), obs_normalized.cols());
  x << obs_normalized, latent;
  return mlp_.Apply(x);
}

nn::NodeId Critic::Forward(nn::Graph& g, nn::NodeId obs_normalized, nn::NodeId latent) {
  return mlp_.Forward(g, g.Concat(obs_normalized, latent));
}

void Critic::AddToCheckpoint(nn::Checkpoint& ckpt) const {
  std::vector<const nn::Parameter*> params;
  mlp_.CollectParameters(params);
  for (const nn::Parameter* p : params) ckpt.Add(p->name, p->value);
}

void Critic::LoadFromCheckpoint(const nn::Checkpoint& ckpt) {
  std::vector<nn::Parameter*> params;
  mlp_.CollectParameters(params);
  nn::LoadParameters(ckpt, params);
}

Eigen::VectorXf GaussianLogProb(const nn::Matrix& actions, const nn::Matrix& mean,
                                const Eigen::VectorXf& log_std) {
  const Eigen::VectorXf inv_var = (-2.0f * log_std.array()).exp();
  const float constant = log_std.sum() + kLogSqrt2Pi * static_cast<float>(log_std.size());
  Eigen::VectorXf out(actions.cols());
  for (Eigen::Index c = 0; c < actions.cols(); ++c) {
    const Eigen::VectorXf d = actions.col(c) - mean.col(c);
    out[c] = -0.5f * d.cwiseProduct(d).dot(inv_var) - constant;
  }
  return out;
}

float GaussianEntropy(const Eigen::VectorXf& log_std) {
  return log_std.sum() + (0.5f + kLogSqrt2Pi) * static_cast<float>(log_std.size());
}

}  // namespace dynaware::learner
