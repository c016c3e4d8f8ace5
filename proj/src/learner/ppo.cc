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

#include "dynaware/learner/ppo.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"

namespace dynaware::learner {

namespace {

constexpr int kComponentRows = reward::kNumComponents + 1;

}  // namespace

IdHeadMode ParseIdHeadMode(const std::string& name) {
  if (name == "off") return IdHeadMode::kOff;
  if (name == "reward_only") return IdHeadMode::kRewardOnly;
  if (name == "reward_plus_aux") return IdHeadMode::kRewardPlusAux;
  throw ConfigError("unknown id_mode '" + name + "' (expected off, reward_only, reward_plus_aux)");
}

const char* IdHeadModeName(IdHeadMode mode) {
  switch (mode) {
    case IdHeadMode::kOff:
      return "off";
    case IdHeadMode::kRewardOnly:
      return "reward_only";
    case IdHeadMode::kRewardPlusAux:
      return "reward_plus_aux";
  }
  return "?";
}

TrainConfig TrainConfig::FromConfig(const KvConfig& kv) {
  TrainConfig c;
  c.num_envs = static_cast<int>(kv.GetInt("train.num_envs", c.num_envs));
  c.horizon = static_cast<int>(kv.GetInt("train.horizon", c.horizon));
  c.epochs = static_cast<int>(kv.GetInt("train.epochs", c.epochs));
  c.minibatches = static_cast<int>(kv.GetInt("train.minibatches", c.minibatches));
  c.gamma = kv.GetDouble("train.gamma", c.gamma);
  c.lambda = kv.GetDouble("train.lambda", c.lambda);
  c.clip = kv.GetDouble("train.clip", c.clip);
  c.value_coef = kv.GetDouble("train.value_coef", c.value_coef);
  c.entropy_coef = kv.GetDouble("train.entropy_coef", c.entropy_coef);
  c.learning_rate = kv.GetDouble("train.learning_rate", c.learning_rate);
  c.max_grad_norm = kv.GetDouble("train.max_grad_norm", c.max_grad_norm);
  c.desired_kl = kv.GetDouble("train.desired_kl", c.desired_kl);
  c.init_std = kv.GetDouble("train.init_std", c.init_std);
  c.latent_dim = static_cast<int>(kv.GetInt("train.latent_dim", c.latent_dim));
  c.iterations = static_cast<int>(kv.GetInt("train.iterations", c.iterations));
  c.checkpoint_every = static_cast<int>(kv.GetInt("train.checkpoint_every", c.checkpoint_every));
  c.id_mode = ParseIdHeadMode(kv.GetString("train.id_mode", IdHeadModeName(c.id_mode)));
  c.ApplyModeDefaults();
  c.alpha_dyn = kv.GetDouble("train.alpha_dyn", c.alpha_dyn);
  c.w_dyn = kv.GetDouble("train.w_dyn", c.w_dyn);
  const std::string fall = kv.GetString("train.fall_bootstrap", "absorbing");
  if (fall == "absorbing") {
    c.fall_bootstrap = FallBootstrap::kAbsorbing;
  } else if (fall == "zero") {
    c.fall_bootstrap = FallBootstrap::kZero;
  } else {
    throw ConfigError(kv.Where("train.fall_bootstrap") + ": unknown fall_bootstrap '" + fall +
                      "' (expected absorbing or zero)");
  }
  c.terrain_kind = sim::ParseTerrainKind(kv.GetString("terrain.kind", "flat"));
  c.terrain_level = static_cast<int>(kv.GetInt("terrain.level", c.terrain_level));

  c.env.model = sim::RobotModel::FromConfig(kv);
  c.env.randomization = sim::RandomizationSpec::FromConfig(kv);
  c.env.actuator = actuator::ActuatorConfig::FromConfig(kv, c.env.model.torque_limit);
  c.env.reward = reward::RewardConfig::FromConfig(kv);
  c.env.episode_length = static_cast<int>(kv.GetInt("env.episode_length", c.env.episode_length));
  c.env.action_scale = kv.GetDouble("env.action_scale", c.env.action_scale);
  c.env.action_clip = kv.GetDouble("env.action_clip", c.env.action_clip);
  c.env.command_range = kv.GetDouble("env.command_range", c.env.command_range);
  c.Finalize();
  return c;
}

void TrainConfig::ApplyModeDefaults() {
  if (id_mode == IdHeadMode::kRewardOnly) {
    alpha_dyn = 0.0;
    w_dyn = -5e-4;
  } else {
    alpha_dyn = 3e-4;
    w_dyn = -1e-2;
  }
}

void TrainConfig::Finalize() {
  env.reward.dynamics_enabled = id_head();
  env.reward.w_dyn = w_dyn;
  Validate();
}

void TrainConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("train: ") + what);
  };
  require(num_envs >= 1, "num_envs must be >= 1");
  require(horizon >= 1, "horizon must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(minibatches >= 1 && minibatches <= num_envs * horizon,
          "minibatches must be in [1, num_envs * horizon]");
  require(gamma > 0.0 && gamma < 1.0, "gamma must be in (0, 1)");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
  require(clip > 0.0, "clip must be > 0");
  require(value_coef >= 0.0, "value_coef must be >= 0");
  require(entropy_coef >= 0.0, "entropy_coef must be >= 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(max_grad_norm > 0.0, "max_grad_norm must be > 0");
  require(init_std > 0.0, "init_std must be > 0");
  require(latent_dim >= 1, "latent_dim must be >= 1");
  require(iterations >= 0, "iterations must be >= 0");
  require(checkpoint_every >= 1, "checkpoint_every must be >= 1");
  require(alpha_dyn >= 0.0, "alpha_dyn must be >= 0");
  require(env.episode_length >= 1, "env.episode_length must be >= 1");
  require(env.action_scale > 0.0, "env.action_scale must be > 0");
  require(env.command_range >= 0.0, "env.command_range must be >= 0");
  if (id_head()) require(w_dyn < 0.0, "w_dyn must be < 0 when the ID head is enabled");
  if (id_mode == IdHeadMode::kRewardOnly) {
    require(alpha_dyn == 0.0, "id_mode reward_only requires alpha_dyn = 0");
  }
  if (terrain_level < 0 || terrain_level >= sim::kNumTerrainLevels) {
    throw ConfigError("terrain.level must be in [0, 9]");
  }
  env.model.Validate();
  env.randomization.Validate();
  env.actuator.Validate();
  env.reward.Validate();
}

nlohmann::json TrainConfig::ToJson() const {
  nlohmann::json j;
  j["num_envs"] = num_envs;
  j["horizon"] = horizon;
  j["epochs"] = epochs;
  j["minibatches"] = minibatches;
  j["gamma"] = gamma;
  j["lambda"] = lambda;
  j["clip"] = clip;
  j["value_coef"] = value_coef;
  j["entropy_coef"] = entropy_coef;
  j["learning_rate"] = learning_rate;
  j["max_grad_norm"] = max_grad_norm;
  j["desired_kl"] = desired_kl;
  j["init_std"] = init_std;
  j["latent_dim"] = latent_dim;
  j["iterations"] = iterations;
  j["checkpoint_every"] = checkpoint_every;
  j["id_mode"] = IdHeadModeName(id_mode);
  j["alpha_dyn"] = id_head() ? nlohmann::json(alpha_dyn) : nlohmann::json(nullptr);
  j["w_dyn"] = id_head() ? w_dyn : 0.0;
  j["fall_bootstrap"] = fall_bootstrap == FallBootstrap::kAbsorbing ? "absorbing" : "zero";
  j["terrain_kind"] = sim::TerrainKindName(terrain_kind);
  j["terrain_level"] = terrain_level;
  j["n_joints"] = env.model.n_joints;
  j["episode_length"] = env.episode_length;
  j["action_scale"] = env.action_scale;
  j["action_clip"] = env.action_clip;
  j["command_range"] = env.command_range;
  j["actuator"] = {{"kp", env.actuator.kp},
                   {"kd", env.actuator.kd},
                   {"torque_limit", env.actuator.torque_limit},
                   {"mode", actuator::ActuatorModeName(env.actuator.mode)}};
  nlohmann::json rw;
  for (int i = 0; i < reward::kNumComponents; ++i) {
    rw[reward::ComponentKey(i)] = env.reward.coefficients[i];
  }
  rw["dt"] = env.reward.dt;
  rw["sigma_v"] = env.reward.sigma_v;
  rw["sigma_omega"] = env.reward.sigma_omega;
  j["reward"] = rw;
  const auto& r = env.randomization;
  j["randomization"] = {{"com_displacement", {r.com_displacement.lo, r.com_displacement.hi}},
                        {"motor_strength", {r.motor_strength.lo, r.motor_strength.hi}},
                        {"motor_offset", {r.motor_offset.lo, r.motor_offset.hi}},
                        {"friction", {r.friction.lo, r.friction.hi}},
                        {"restitution", {r.restitution.lo, r.restitution.hi}},
                        {"dof_position_noise", r.dof_position_noise},
                        {"dof_velocity_noise", r.dof_velocity_noise},
                        {"gravity_noise", r.gravity_noise}};
  return j;
}

void RolloutBuffer::Allocate(int h, int n, const PolicyDims& dims) {
  horizon = h;
  num_envs = n;
  const int total = h * n;
  obs.resize(dims.obs_dim, total);
  privileged.resize(dims.privileged_dim, total);
  actions.resize(dims.action_dim, total);
  log_probs.resize(total);
  values.resize(total);
  rewards.resize(total);
  dones.resize(total);
  components.resize(kComponentRows, total);
  applied_torque.resize(dims.action_dim, total);
  if (dims.torque_dim > 0) {
    predicted_torque.resize(dims.torque_dim, total);
  } else {
    predicted_torque.resize(0, 0);
  }
  last_values.resize(n);
  advantages.resize(total);
  returns.resize(total);
}

EpisodeStats RolloutCollector::Collect(const TeacherPolicy& policy, const Critic& critic,
                                       const TrainConfig& cfg, RolloutBuffer& buffer,
                                       bool deterministic) {
  std::vector<LocomotionEnv>& envs = *envs_;
  const int n = static_cast<int>(envs.size());
  const PolicyDims& dims = policy.dims();
  if (static_cast<int>(noise_rngs_->size()) != n) {
    throw ConfigError("RolloutCollector: one noise stream per env required");
  }
  buffer.Allocate(cfg.horizon, n, dims);
  if (!started_) {
    current_obs_.resize(dims.obs_dim, n);
    for (int e = 0; e < n; ++e) current_obs_.col(e) = envs[e].Observe();
    episode_returns_.assign(n, 0.0);
    started_ = true;
  }
  const Eigen::VectorXf std = policy.Std();
  const Eigen::VectorXf log_std = policy.log_std().value.col(0);
  const float gamma = static_cast<float>(cfg.gamma);
  EpisodeStats stats;
  nn::Matrix priv(dims.privileged_dim, n);
  nn::Matrix actions(dims.action_dim, n);

  for (int t = 0; t < cfg.horizon; ++t) {
    for (int e = 0; e < n; ++e) priv.col(e) = envs[e].Privileged();
    const nn::Matrix latent = policy.Latent(priv);
    const nn::Matrix trunk = policy.TrunkFeatures(current_obs_, latent);
    const nn::Matrix mean = policy.ActionFromTrunk(trunk);
    nn::Matrix torque_pred;
    if (policy.has_id_head()) torque_pred = policy.PredictTorque(trunk);
    const nn::Matrix obs_n = ((current_obs_.colwise() - policy.obs_normalizer().shift).array()
                                  .colwise() *
                              policy.obs_normalizer().scale.array())
                                 .matrix();
    const nn::Matrix values = critic.Value(obs_n, latent);
    for (int e = 0; e < n; ++e) {
      for (int i = 0; i < dims.action_dim; ++i) {
        const float noise = deterministic ? 0.0f : static_cast<float>((*noise_rngs_)[e].Normal());
        actions(i, e) = mean(i, e) + std[i] * noise;
      }
    }
    const Eigen::VectorXf logp = GaussianLogProb(actions, mean, log_std);

    const int base = t * n;
    buffer.obs.middleCols(base, n) = current_obs_;
    buffer.privileged.middleCols(base, n) = priv;
    buffer.actions.middleCols(base, n) = actions;
    buffer.log_probs.segment(base, n) = logp;
    buffer.values.segment(base, n) = values.row(0).transpose();
    if (policy.has_id_head()) buffer.predicted_torque.middleCols(base, n) = torque_pred;

    for (int e = 0; e < n; ++e) {
      LocomotionEnv& env = envs[e];
      const Eigen::VectorXd a = actions.col(e).cast<double>();
      Eigen::VectorXd tp;
      if (policy.has_id_head()) tp = torque_pred.col(e).cast<double>();
      const StepResult r = env.Step(a, policy.has_id_head() ? &tp : nullptr);
      const int idx = base + e;
      for (int k = 0; k < reward::kNumComponents; ++k) {
        buffer.components(k, idx) = static_cast<float>(r.reward.weighted[k]);
      }
      buffer.components(reward::kNumComponents, idx) = static_cast<float>(r.reward.dynamics);
      buffer.applied_torque.col(idx) = r.applied_torque.cast<float>();
      float rew = static_cast<float>(r.reward.total);
      episode_returns_[e] += r.reward.total;
      if (r.timeout) {
        rew += gamma * values(0, e);
      } else if ((r.fell || r.diverged) && cfg.fall_bootstrap == FallBootstrap::kAbsorbing) {
        rew += gamma * rew / (1.0f - gamma);
      }
      buffer.rewards[idx] = rew;
      buffer.dones[idx] = r.done() ? 1.0f : 0.0f;
      if (r.done()) {
        ++stats.completed;
        if (r.fell) ++stats.falls;
        if (r.diverged) ++stats.diverged;
        stats.length_sum += env.episode_step();
        stats.return_sum += episode_returns_[e];
        episode_returns_[e] = 0.0;
        env.Reset();
      }
      current_obs_.col(e) = env.Observe();
    }
  }
  for (int e = 0; e < n; ++e) priv.col(e) = envs[e].Privileged();
  const nn::Matrix latent = policy.Latent(priv);
  const nn::Matrix obs_n =
      ((current_obs_.colwise() - policy.obs_normalizer().shift).array().colwise() *
       policy.obs_normalizer().scale.array())
          .matrix();
  buffer.last_values = critic.Value(obs_n, latent).row(0).transpose();
  return stats;
}

void ComputeGae(std::span<const float> rewards, std::span<const float> values,
                std::span<const float> dones, float bootstrap, double gamma, double lambda,
                std::span<float> advantages, std::span<float> returns) {
  const size_t len = rewards.size();
  if (values.size() != len || dones.size() != len || advantages.size() != len ||
      returns.size() != len) {
    throw ConfigError("ComputeGae: length mismatch");
  }
  double gae = 0.0;
  for (size_t k = len; k-- > 0;) {
    const double next_value = k + 1 < len ? values[k + 1] : bootstrap;
    const double not_done = 1.0 - dones[k];
    const double delta = rewards[k] + gamma * next_value * not_done - values[k];
    gae = delta + gamma * lambda * not_done * gae;
    advantages[k] = static_cast<float>(gae);
    returns[k] = static_cast<float>(gae + values[k]);
  }
}

void ComputeGae(RolloutBuffer& b, double gamma, double lambda) {
  const int n = b.num_envs;
  std::vector<float> r(b.horizon), v(b.horizon), d(b.horizon), a(b.horizon), ret(b.horizon);
  for (int e = 0; e < n; ++e) {
    for (int t = 0; t < b.horizon; ++t) {
      r[t] = b.rewards[t * n + e];
      v[t] = b.values[t * n + e];
      d[t] = b.dones[t * n + e];
    }
    ComputeGae(r, v, d, b.last_values[e], gamma, lambda, a, ret);
    for (int t = 0; t < b.horizon; ++t) {
      b.advantages[t * n + e] = a[t];
      b.returns[t * n + e] = ret[t];
    }
  }
}

void NormalizeAdvantages(Eigen::VectorXf& adv) {
  if (adv.size() == 0) return;
  const double mean = adv.cast<double>().mean();
  const double var = (adv.cast<double>().array() - mean).square().mean();
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (Eigen::Index i = 0; i < adv.size(); ++i) {
    adv[i] = static_cast<float>((adv[i] - mean) * inv);
  }
}

void TeacherModel::Build(const TrainConfig& cfg, uint64_t seed) {
  const PolicyDims dims = PolicyDims::ForModel(cfg.env.model, cfg.id_head(), cfg.latent_dim);
  policy = TeacherPolicy(dims, InputNormalizer::ForObservation(cfg.env.model),
                         InputNormalizer::ForPrivileged(cfg.env.model));
  policy.Initialize(DeriveSeed(seed, "init"), static_cast<float>(cfg.init_std));
  critic = Critic(dims.obs_dim, dims.latent_dim);
  critic.Initialize(DeriveSeed(seed, "init"));
  optimizer = nn::Adam(TrainableParameters(),
                       nn::AdamConfig{static_cast<float>(cfg.learning_rate)});
}

std::vector<nn::Parameter*> TeacherModel::TrainableParameters() {
  std::vector<nn::Parameter*> params;
  policy.EncoderParameters(params);
  policy.PolicyParameters(params);
  critic.CollectParameters(params);
  return params;
}

UpdateStats PpoUpdate(TeacherModel& model, RolloutBuffer& buffer, const TrainConfig& cfg,
                      Rng& rng) {
  TeacherPolicy& policy = model.policy;
  const PolicyDims& dims = policy.dims();
  const int total = buffer.size();
  const int mb_count = cfg.minibatches;
  const int mb_size = total / mb_count;
  const float clip = static_cast<float>(cfg.clip);
  const bool use_dyn = policy.has_id_head();
  const float alpha = static_cast<float>(cfg.alpha_dyn);

  NormalizeAdvantages(buffer.advantages);

  UpdateStats stats;
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  int count = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (int mb = 0; mb < mb_count; ++mb) {
      const int begin = mb * mb_size;
      const int b = mb + 1 == mb_count ? total - begin : mb_size;
      const float inv_b = 1.0f / static_cast<float>(b);
      nn::Matrix obs(dims.obs_dim, b), priv(dims.privileged_dim, b), act(dims.action_dim, b);
      nn::Matrix tau_a(dims.action_dim, b);
      Eigen::VectorXf old_logp(b), adv(b), ret(b);
      for (int i = 0; i < b; ++i) {
        const int s = order[begin + i];
        obs.col(i) = buffer.obs.col(s);
        priv.col(i) = buffer.privileged.col(s);
        act.col(i) = buffer.actions.col(s);
        tau_a.col(i) = buffer.applied_torque.col(s);
        old_logp[i] = buffer.log_probs[s];
        adv[i] = buffer.advantages[s];
        ret[i] = buffer.returns[s];
      }

      model.optimizer.ZeroGrad();
      nn::Graph g;
      const nn::NodeId obs_n = policy.NormalizedObs(g, obs);
      const nn::NodeId latent = policy.EncodeLatent(g, priv);
      const PolicyNodes nodes = policy.ForwardFromLatent(g, obs_n, latent);
      const nn::NodeId value = model.critic.Forward(g, obs_n, latent);

      const nn::Matrix& mean = g.value(nodes.action_mean);
      const Eigen::VectorXf log_std = policy.log_std().value.col(0);
      const Eigen::VectorXf inv_var = (-2.0f * log_std.array()).exp();
      const Eigen::VectorXf logp = GaussianLogProb(act, mean, log_std);

      MinibatchStats ms;
      double surrogate = 0.0, kl = 0.0, clipped = 0.0, ratio_sum = 0.0;
      Eigen::VectorXf dlogp(b);
      for (int i = 0; i < b; ++i) {
        const float log_ratio = logp[i] - old_logp[i];
        const float ratio = std::exp(log_ratio);
        const float unclipped = ratio * adv[i];
        const float clipped_ratio = std::clamp(ratio, 1.0f - clip, 1.0f + clip);
        const float clipped_obj = clipped_ratio * adv[i];
        surrogate -= std::min(unclipped, clipped_obj);
        const bool active = unclipped <= clipped_obj;
        dlogp[i] = active ? -unclipped * inv_b : 0.0f;
        if (clipped_ratio != ratio) clipped += 1.0;
        kl += (ratio - 1.0f) - log_ratio;
        ratio_sum += ratio;
      }
      ms.surrogate = surrogate * inv_b;
      ms.approx_kl = kl * inv_b;
      ms.clip_fraction = clipped * inv_b;
      ms.mean_ratio = ratio_sum * inv_b;

      const nn::Matrix& v = g.value(value);
      const Eigen::VectorXf v_err = v.row(0).transpose() - ret;
      ms.value_term = cfg.value_coef * v_err.cast<double>().squaredNorm() * inv_b;
      const double entropy = GaussianEntropy(log_std);
      ms.entropy_term = -cfg.entropy_coef * entropy;

      std::vector<std::pair<nn::NodeId, nn::Matrix>> seeds;
      const nn::Matrix diff = (act - mean).array().colwise() * inv_var.array();
      seeds.emplace_back(nodes.action_mean, (diff.array().rowwise() * dlogp.transpose().array()).matrix());
      seeds.emplace_back(value, (2.0f * static_cast<float>(cfg.value_coef) * inv_b) *
                                    v_err.transpose());
      if (use_dyn) {
        const nn::Matrix tau_err = tau_a - g.value(nodes.torque);
        ms.dyn_mse = tau_err.cast<double>().squaredNorm() * inv_b;
        ms.dyn_term = cfg.alpha_dyn * ms.dyn_mse;
        seeds.emplace_back(nodes.torque, (-2.0f * alpha * inv_b) * tau_err);
      }
      ms.total = ms.surrogate + ms.value_term + ms.entropy_term + ms.dyn_term;

      if (!std::isfinite(ms.total)) {
        ++stats.aborted_epochs;
        ms.skipped = true;
        stats.minibatches.push_back(ms);
        break;
      }

      g.Backward(seeds);
      // Log-std gradient: surrogate path plus entropy bonus.
      nn::Parameter& ls = policy.log_std();
      for (int k = 0; k < dims.action_dim; ++k) {
        const Eigen::ArrayXf z2 = (act.row(k) - mean.row(k)).array().square() * inv_var[k];
        ls.grad(k, 0) += ((z2 - 1.0f) * dlogp.transpose().array()).sum() -
                         static_cast<float>(cfg.entropy_coef);
      }
      ms.grad_norm = nn::ClipGradNorm(model.optimizer.params(),
                                      static_cast<float>(cfg.max_grad_norm));
      if (!model.optimizer.Step()) {
        ms.skipped = true;
        ++stats.skipped_steps;
      }
      if (cfg.desired_kl > 0.0) {
        float lr = model.optimizer.config().learning_rate;
        if (ms.approx_kl > 2.0 * cfg.desired_kl) lr = std::max(1e-5f, lr / 1.5f);
        if (ms.approx_kl < 0.5 * cfg.desired_kl) lr = std::min(1e-2f, lr * 1.5f);
        model.optimizer.set_learning_rate(lr);
      }

      const double audit = std::abs(ms.total - (ms.surrogate + ms.value_term + ms.entropy_term +
                                                ms.dyn_term));
      stats.max_audit_error = std::max(stats.max_audit_error, audit);
      stats.surrogate += ms.surrogate;
      stats.value_term += ms.value_term;
      stats.entropy_term += ms.entropy_term;
      stats.dyn_term += ms.dyn_term;
      stats.total += ms.total;
      stats.approx_kl += ms.approx_kl;
      stats.clip_fraction += ms.clip_fraction;
      stats.dyn_mse += ms.dyn_mse;
      ++count;
      stats.minibatches.push_back(ms);
    }
  }
  if (count > 0) {
    const double inv = 1.0 / count;
    stats.surrogate *= inv;
    stats.value_term *= inv;
    stats.entropy_term *= inv;
    stats.dyn_term *= inv;
    stats.total *= inv;
    stats.approx_kl *= inv;
    stats.clip_fraction *= inv;
    stats.dyn_mse *= inv;
  }
  stats.learning_rate = model.optimizer.config().learning_rate;
  return stats;
}

std::string TrainingLogHeader(bool dynamics_enabled) {
  std::ostringstream s;
  s << "iteration";
  for (const char* name : reward::kComponentNames) s << "," << name;
  if (dynamics_enabled) s << "," << reward::kDynamicsName;
  s << ",dyn_loss,dyn_mse,surrogate_loss,value_loss,entropy_loss,total_loss,approx_kl,"
       "clip_fraction,learning_rate,action_std,episodes,falls,diverged,mean_episode_length,"
       "mean_episode_return";
  return s.str();
}

std::string TrainingLogRow(const IterationLog& log, bool dynamics_enabled) {
  std::ostringstream s;
  s << std::setprecision(9);
  s << log.iteration;
  for (double c : log.components) s << "," << c;
  if (dynamics_enabled) s << "," << log.dynamics;
  const UpdateStats& u = log.update;
  const EpisodeStats& e = log.episodes;
  s << "," << u.dyn_term << "," << u.dyn_mse << "," << u.surrogate << "," << u.value_term << ","
    << u.entropy_term << "," << u.total << "," << u.approx_kl << "," << u.clip_fraction << ","
    << u.learning_rate << "," << log.action_std << "," << e.completed << "," << e.falls << ","
    << e.diverged << "," << (e.completed ? e.length_sum / e.completed : 0.0) << ","
    << (e.completed ? e.return_sum / e.completed : 0.0);
  return s.str();
}

nn::Checkpoint TeacherCheckpoint(const TeacherModel& model, const TrainConfig& cfg, uint64_t seed,
                                 int iteration) {
  nn::Checkpoint ckpt;
  ckpt.meta["kind"] = "teacher";
  ckpt.meta["seed"] = seed;
  ckpt.meta["iteration"] = iteration;
  ckpt.meta["config"] = cfg.ToJson();
  model.policy.AddToCheckpoint(ckpt);
  ckpt.meta["policy_checksum"] = model.policy.PolicyChecksum();
  model.critic.AddToCheckpoint(ckpt);
  return ckpt;
}

std::shared_ptr<const actuator::ActuatorNet> LoadActuatorNet(const actuator::ActuatorConfig& cfg) {
  if (cfg.mode != actuator::ActuatorMode::kLearned) return nullptr;
  return std::make_shared<const actuator::ActuatorNet>(
      actuator::ActuatorNet::FromCheckpoint(nn::LoadCheckpoint(cfg.net_path)));
}

std::vector<LocomotionEnv> MakeEnvs(const TrainConfig& cfg, uint64_t seed,
                                    std::shared_ptr<const sim::TerrainConfig> terrain,
                                    std::shared_ptr<const actuator::ActuatorNet> net) {
  std::vector<LocomotionEnv> envs;
  envs.reserve(cfg.num_envs);
  for (int e = 0; e < cfg.num_envs; ++e) envs.emplace_back(cfg.env, terrain, seed, e, net);
  return envs;
}

std::vector<Rng> MakeNoiseStreams(int count, uint64_t seed) {
  std::vector<Rng> rngs;
  rngs.reserve(count);
  for (int e = 0; e < count; ++e) rngs.emplace_back(DeriveSeed(seed, "action_noise", e));
  return rngs;
}

TrainResult TrainTeacher(const TrainConfig& cfg, uint64_t seed, const TrainOptions& options) {
  cfg.Validate();
  TrainResult result;
  result.model = std::make_unique<TeacherModel>();
  TeacherModel& model = *result.model;
  model.Build(cfg, seed);

  auto terrain = std::make_shared<const sim::TerrainConfig>(
      sim::GenerateTerrain(cfg.terrain_kind, cfg.terrain_level, DeriveSeed(seed, "terrain")));
  std::vector<LocomotionEnv> envs = MakeEnvs(cfg, seed, terrain, LoadActuatorNet(cfg.env.actuator));
  std::vector<Rng> noise = MakeNoiseStreams(cfg.num_envs, seed);
  Rng minibatch_rng(DeriveSeed(seed, "minibatch"));
  RolloutCollector collector(&envs, &noise);
  RolloutBuffer buffer;

  std::ofstream csv;
  std::filesystem::path ckpt_dir;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    ckpt_dir = std::filesystem::path(options.out_dir) / "checkpoints";
    std::filesystem::create_directories(ckpt_dir);
    csv.open(std::filesystem::path(options.out_dir) / "train_log.csv");
    if (!csv) throw ConfigError("cannot write training log in '" + options.out_dir + "'");
    csv << TrainingLogHeader(cfg.id_head()) << "\n";
  }

  for (int it = 0; it < cfg.iterations; ++it) {
    IterationLog log;
    log.iteration = it;
    try {
      log.episodes = collector.Collect(model.policy, model.critic, cfg, buffer);
      ComputeGae(buffer, cfg.gamma, cfg.lambda);
      const Eigen::VectorXf mean_components = buffer.components.rowwise().mean();
      for (int k = 0; k < reward::kNumComponents; ++k) log.components[k] = mean_components[k];
      log.dynamics = mean_components[reward::kNumComponents];
      log.update = PpoUpdate(model, buffer, cfg, minibatch_rng);
    } catch (const NumericError& e) {
      throw NumericError("iteration " + std::to_string(it) + ": " + e.what());
    }
    log.action_std = model.policy.Std().mean();
    if (!model.policy.log_std().value.allFinite()) {
      throw NumericError("iteration " + std::to_string(it) + ": policy parameters diverged");
    }
    if (csv.is_open()) {
      csv << TrainingLogRow(log, cfg.id_head()) << "\n";
      csv.flush();
    }
    if (!ckpt_dir.empty() && ((it + 1) % cfg.checkpoint_every == 0 || it + 1 == cfg.iterations)) {
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%05d.ckpt", it + 1);
      nn::SaveCheckpoint((ckpt_dir / name).string(), TeacherCheckpoint(model, cfg, seed, it + 1));
    }
    if (options.on_iteration) options.on_iteration(log);
    result.log.push_back(std::move(log));
  }
  if (!options.out_dir.empty()) {
    nn::SaveCheckpoint((std::filesystem::path(options.out_dir) / "teacher.ckpt").string(),
                       TeacherCheckpoint(model, cfg, seed, cfg.iterations));
  }
  return result;
}

}  // namespace dynaware::learner
