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

#include "dynaware/actuator/actuator.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"
#include "dynaware/common/rng.h"
#include "dynaware/nn/optimizer.h"
#include "dynaware/sim/simulator.h"

namespace dynaware::actuator {

ActuatorMode ParseActuatorMode(const std::string& name) {
  if (name == "pd") return ActuatorMode::kPd;
  if (name == "learned") return ActuatorMode::kLearned;
  throw ConfigError("unknown actuator mode '" + name + "' (expected pd or learned)");
}

const char* ActuatorModeName(ActuatorMode mode) {
  return mode == ActuatorMode::kPd ? "pd" : "learned";
}

ActuatorConfig ActuatorConfig::FromConfig(const KvConfig& config, double default_torque_limit) {
  ActuatorConfig cfg;
  cfg.kp = config.GetDouble("actuator.kp", cfg.kp);
  cfg.kd = config.GetDouble("actuator.kd", cfg.kd);
  cfg.torque_limit = config.GetDouble("actuator.torque_limit", default_torque_limit);
  cfg.mode = ParseActuatorMode(config.GetString("actuator.mode", "pd"));
  cfg.net_path = config.GetString("actuator.net_path", "");
  if (cfg.mode == ActuatorMode::kLearned && cfg.net_path.empty()) {
    throw ConfigError(config.Where("actuator.mode") +
                      ": learned actuator mode requires actuator.net_path");
  }
  cfg.Validate();
  return cfg;
}

void ActuatorConfig::Validate() const {
  if (!(kp > 0.0)) throw ConfigError("actuator: kp must be > 0");
  if (!(kd > 0.0)) throw ConfigError("actuator: kd must be > 0");
  if (!(torque_limit > 0.0)) throw ConfigError("actuator: torque_limit must be > 0");
}

Eigen::VectorXd PdTorque(const Eigen::VectorXd& target, const Eigen::VectorXd& q,
                         const Eigen::VectorXd& qd, const ActuatorConfig& cfg,
                         const std::vector<double>& strength, const std::vector<double>& offset) {
  const Eigen::Index n = target.size();
  if (q.size() != n || qd.size() != n || static_cast<Eigen::Index>(strength.size()) != n ||
      static_cast<Eigen::Index>(offset.size()) != n) {
    throw ConfigError("PdTorque: dimension mismatch");
  }
  Eigen::VectorXd tau(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double raw = strength[i] * (cfg.kp * ((target[i] + offset[i]) - q[i]) - cfg.kd * qd[i]);
    if (!std::isfinite(raw)) throw NumericError("PdTorque: non-finite input");
    tau[i] = std::clamp(raw, -cfg.torque_limit, cfg.torque_limit);
  }
  return tau;
}

ActuatorHistory::ActuatorHistory(int n_joints, int length) : n_joints_(n_joints), length_(length) {
  if (n_joints < 1 || length < 1) throw ConfigError("ActuatorHistory: invalid dimensions");
  Reset();
}

void ActuatorHistory::Reset() {
  errors_.assign(length_, Eigen::VectorXd::Zero(n_joints_));
  velocities_.assign(length_, Eigen::VectorXd::Zero(n_joints_));
}

void ActuatorHistory::Push(const Eigen::VectorXd& position_error,
                           const Eigen::VectorXd& velocity) {
  if (position_error.size() != n_joints_ || velocity.size() != n_joints_) {
    throw ConfigError("ActuatorHistory: dimension mismatch");
  }
  errors_.pop_front();
  velocities_.pop_front();
  errors_.push_back(position_error);
  velocities_.push_back(velocity);
}

nn::Matrix ActuatorHistory::Features() const {
  nn::Matrix f(2 * length_, n_joints_);
  for (int k = 0; k < length_; ++k) {
    f.row(2 * k) = errors_[k].cast<float>().transpose();
    f.row(2 * k + 1) = velocities_[k].cast<float>().transpose();
  }
  return f;
}

ActuatorNet::ActuatorNet(int history_length, double torque_limit, std::vector<int> hidden)
    : history_length_(history_length), torque_limit_(torque_limit) {
  if (history_length < 1) throw ConfigError("ActuatorNet: history length must be >= 1");
  nn::MlpSpec spec{2 * history_length, std::move(hidden), 1};
  mlp_ = nn::Mlp(spec, "actuator");
}

void ActuatorNet::Initialize(Rng& rng) { mlp_.Initialize(rng, 1.41421356f, 1.0f); }

nn::Matrix ActuatorNet::Scale(const nn::Matrix& features) const {
  if (features.rows() != 2 * history_length_) {
    throw ConfigError("ActuatorNet: history has " + std::to_string(features.rows() / 2) +
                      " steps, expected " + std::to_string(history_length_));
  }
  nn::Matrix x = features;
  for (int k = 0; k < history_length_; ++k) {
    x.row(2 * k) *= kErrorScale;
    x.row(2 * k + 1) *= kVelocityScale;
  }
  return x;
}

nn::NodeId ActuatorNet::Forward(nn::Graph& g, const nn::Matrix& features) {
  return mlp_.Forward(g, g.Input(Scale(features), false));
}

nn::Matrix ActuatorNet::Predict(const nn::Matrix& features) const {
  return mlp_.Apply(Scale(features)) * static_cast<float>(torque_limit_);
}

Eigen::VectorXd ActuatorNet::Torque(const ActuatorHistory& history) const {
  if (history.length() != history_length_) {
    throw ConfigError("ActuatorNet: history length mismatch");
  }
  const nn::Matrix pred = Predict(history.Features());
  Eigen::VectorXd tau = pred.row(0).transpose().cast<double>();
  return tau.cwiseMax(-torque_limit_).cwiseMin(torque_limit_);
}

nn::Checkpoint ActuatorNet::ToCheckpoint() const {
  nn::Checkpoint ckpt;
  ckpt.meta["kind"] = "actuator_net";
  ckpt.meta["history_length"] = history_length_;
  ckpt.meta["torque_limit"] = torque_limit_;
  ckpt.meta["hidden"] = mlp_.spec().hidden;
  for (const nn::LinearLayer& layer : mlp_.layers()) {
    ckpt.Add(layer.weight().name, layer.weight().value);
    ckpt.Add(layer.bias().name, layer.bias().value);
  }
  return ckpt;
}

ActuatorNet ActuatorNet::FromCheckpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.meta.value("kind", "") != "actuator_net") {
    throw ConfigError("checkpoint does not hold an actuator network");
  }
  ActuatorNet net(ckpt.meta.at("history_length").get<int>(),
                  ckpt.meta.at("torque_limit").get<double>(),
                  ckpt.meta.at("hidden").get<std::vector<int>>());
  std::vector<nn::Parameter*> params;
  net.CollectParameters(params);
  nn::LoadParameters(ckpt, params);
  return net;
}

void ActuatorDataset::WriteCsv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  for (int k = 0; k < history_length; ++k) f << "err_" << k << ",vel_" << k << ",";
  f << "torque\n";
  f.precision(9);
  for (int i = 0; i < size(); ++i) {
    for (Eigen::Index r = 0; r < features.rows(); ++r) f << features(r, i) << ",";
    f << torques[i] << "\n";
  }
}

ActuatorDataset ActuatorDataset::ReadCsv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open actuator dataset '" + path + "'");
  std::string line;
  std::getline(f, line);
  const int columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 3 || (columns - 1) % 2 != 0) {
    throw ConfigError(path + ":1: malformed actuator dataset header");
  }
  ActuatorDataset data;
  data.history_length = (columns - 1) / 2;
  std::vector<float> values;
  int rows = 0;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      ++count;
    }
    if (count != columns) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(columns) + " columns");
    }
    ++rows;
  }
  data.features.resize(columns - 1, rows);
  data.torques.resize(rows);
  for (int i = 0; i < rows; ++i) {
    for (int r = 0; r < columns - 1; ++r) data.features(r, i) = values[i * columns + r];
    data.torques[i] = values[i * columns + columns - 1];
  }
  return data;
}

ActuatorDataset GenerateActuatorDataset(const sim::RobotModel& model, const ActuatorConfig& cfg,
                                        int num_steps, uint64_t seed, int history_length) {
  const int n = model.n_joints;
  sim::RandomizationSpec spec;
  const sim::TerrainConfig terrain = sim::GenerateTerrain(sim::TerrainKind::kFlat, 0, 0);
  Rng rng(DeriveSeed(seed, "actuator_targets"));

  ActuatorDataset data;
  data.history_length = history_length;
  data.features.resize(2 * history_length, static_cast<Eigen::Index>(num_steps) * n);
  data.torques.resize(static_cast<Eigen::Index>(num_steps) * n);

  const Eigen::VectorXd nominal = Eigen::Map<const Eigen::VectorXd>(model.q_nominal.data(), n);
  ActuatorHistory history(n, history_length);
  sim::RobotState state;
  sim::EpisodeParams params;
  std::vector<double> no_offset(n, 0.0);
  Eigen::VectorXd target = nominal;
  Eigen::VectorXd drift = Eigen::VectorXd::Zero(n);
  int episode = 0;
  int episode_steps = 0;
  for (int step = 0; step < num_steps; ++step) {
    if (step == 0 || episode_steps >= 1000 ||
        sim::HasFallen(model, state, terrain)) {
      sim::ResetResult reset = sim::Reset(model, spec, terrain, DeriveSeed(seed, "episode", episode));
      state = reset.state;
      params = reset.params;
      history.Reset();
      drift.setZero();
      ++episode;
      episode_steps = 0;
    }
    // Ornstein-Uhlenbeck style target wander around the stance.
    for (int j = 0; j < n; ++j) {
      drift[j] += -0.02 * drift[j] + 0.03 * rng.Normal();
      target[j] = std::clamp(nominal[j] + drift[j], model.q_lower[j], model.q_upper[j]);
    }
    const Eigen::VectorXd q = state.joint_positions();
    const Eigen::VectorXd qd = state.joint_velocities();
    history.Push(target - q, qd);
    const Eigen::VectorXd tau = PdTorque(target, q, qd, cfg, params.motor_strength, no_offset);
    const nn::Matrix f = history.Features();
    for (int j = 0; j < n; ++j) {
      const Eigen::Index col = static_cast<Eigen::Index>(step) * n + j;
      data.features.col(col) = f.col(j);
      data.torques[col] = static_cast<float>(tau[j]);
    }
    std::vector<double> tau_v(tau.data(), tau.data() + n);
    state = sim::StepPhysics(model, state, tau_v, params, terrain, sim::kPhysicsDt);
    ++episode_steps;
  }
  return data;
}

ActuatorNet FitActuatorNet(const ActuatorDataset& data, double torque_limit,
                           const ActuatorFitConfig& cfg, uint64_t seed,
                           ActuatorFitReport* report) {
  const int total = data.size();
  if (total < kMinActuatorSamples) {
    throw TrainingError("actuator dataset has " + std::to_string(total) +
                        " samples; at least " + std::to_string(kMinActuatorSamples) +
                        " are required");
  }
  if (data.features.rows() != 2 * data.history_length || data.features.cols() != total) {
    throw ConfigError("actuator dataset: feature matrix shape mismatch");
  }
  Rng rng(DeriveSeed(seed, "actuator_fit"));
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const int holdout = std::max(1, static_cast<int>(total * cfg.holdout_fraction));
  const int train = total - holdout;

  ActuatorNet net(data.history_length, torque_limit);
  net.Initialize(rng);
  std::vector<nn::Parameter*> params;
  net.CollectParameters(params);
  nn::Adam adam(params, nn::AdamConfig{cfg.learning_rate});
  const float scale = static_cast<float>(torque_limit);

  auto gather = [&](int begin, int end, nn::Matrix& x, nn::Matrix& y) {
    x.resize(data.features.rows(), end - begin);
    y.resize(1, end - begin);
    for (int i = begin; i < end; ++i) {
      x.col(i - begin) = data.features.col(order[i]);
      y(0, i - begin) = data.torques[order[i]] / scale;
    }
  };

  nn::Matrix x, y;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.begin() + train, rng.engine());
    for (int begin = 0; begin < train; begin += cfg.batch_size) {
      const int end = std::min(train, begin + cfg.batch_size);
      gather(begin, end, x, y);
      adam.ZeroGrad();
      nn::Graph g;
      const nn::NodeId out = net.Forward(g, x);
      const nn::Matrix diff = g.value(out) - y;
      g.Backward(out, diff * (2.0f / static_cast<float>(end - begin)));
      adam.Step();
    }
  }

  auto rmse = [&](int begin, int end, double* rms) {
    gather(begin, end, x, y);
    const nn::Matrix pred = net.Predict(x).cwiseMax(-scale).cwiseMin(scale);
    const nn::Matrix target = y * scale;
    if (rms) *rms = std::sqrt(target.squaredNorm() / (end - begin));
    return std::sqrt((pred - target).squaredNorm() / (end - begin));
  };
  ActuatorFitReport r;
  r.train_samples = train;
  r.holdout_samples = holdout;
  r.train_rmse = rmse(0, train, nullptr);
  r.holdout_rmse = rmse(train, total, &r.holdout_torque_rms);
  r.meets_threshold = r.holdout_rmse <= cfg.max_relative_rmse * r.holdout_torque_rms ||
                      r.holdout_rmse < 1e-6;
  if (report) *report = r;
  return net;
}

}  // namespace dynaware::actuator
