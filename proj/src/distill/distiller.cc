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

#include "dynaware/distill/distiller.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>
#include <utility>

#include "dynaware/common/error.h"
#include "dynaware/common/kv_config.h"
#include "dynaware/common/rng.h"
#include "dynaware/nn/optimizer.h"

namespace dynaware::distill {
namespace {

using learner::TeacherPolicy;

nn::Matrix Normalize(const nn::Matrix& x, const learner::InputNormalizer& norm) {
  return ((x.colwise() - norm.shift).array().colwise() * norm.scale.array()).matrix();
}

std::vector<nn::Parameter*> ParametersOf(nn::Tcn& tcn) {
  std::vector<nn::Parameter*> params;
  tcn.CollectParameters(params);
  return params;
}

}  // namespace

DistillConfig DistillConfig::FromConfig(const KvConfig& kv) {
  DistillConfig c;
  c.num_envs = static_cast<int>(kv.GetInt("distill.num_envs", c.num_envs));
  c.horizon = static_cast<int>(kv.GetInt("distill.horizon", c.horizon));
  c.iterations = static_cast<int>(kv.GetInt("distill.iterations", c.iterations));
  c.epochs = static_cast<int>(kv.GetInt("distill.epochs", c.epochs));
  c.minibatches = static_cast<int>(kv.GetInt("distill.minibatches", c.minibatches));
  c.learning_rate = kv.GetDouble("distill.learning_rate", c.learning_rate);
  c.max_grad_norm = kv.GetDouble("distill.max_grad_norm", c.max_grad_norm);
  c.eval_episodes = static_cast<int>(kv.GetInt("distill.eval_episodes", c.eval_episodes));
  c.action_gap_threshold = kv.GetDouble("distill.action_gap_threshold", c.action_gap_threshold);
  c.Validate();
  return c;
}

void DistillConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("distill: ") + what);
  };
  require(num_envs >= 1, "num_envs must be >= 1");
  require(horizon >= 1, "horizon must be >= 1");
  require(iterations >= 0, "iterations must be >= 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(minibatches >= 1 && minibatches <= num_envs * horizon,
          "minibatches must be in [1, num_envs * horizon]");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(max_grad_norm > 0.0, "max_grad_norm must be > 0");
  require(eval_episodes >= 1, "eval_episodes must be >= 1");
  require(action_gap_threshold > 0.0, "action_gap_threshold must be > 0");
}

nlohmann::json DistillConfig::ToJson() const {
  return {{"num_envs", num_envs},
          {"horizon", horizon},
          {"iterations", iterations},
          {"epochs", epochs},
          {"minibatches", minibatches},
          {"learning_rate", learning_rate},
          {"max_grad_norm", max_grad_norm},
          {"eval_episodes", eval_episodes},
          {"action_gap_threshold", action_gap_threshold}};
}

ObservationHistory::ObservationHistory(int capacity, int dim)
    : capacity_(capacity), dim_(dim), slots_(Eigen::MatrixXf::Zero(dim, capacity)) {
  if (capacity < 1 || dim < 1) throw ConfigError("ObservationHistory: sizes must be >= 1");
}

void ObservationHistory::Push(const Eigen::VectorXf& obs) {
  if (obs.size() != dim_) {
    throw ConfigError("ObservationHistory: observation has " + std::to_string(obs.size()) +
                      " entries, expected " + std::to_string(dim_));
  }
  slots_.col(head_) = obs;
  head_ = (head_ + 1) % capacity_;
  ++pushed_;
}

void ObservationHistory::Reset() {
  slots_.setZero();
  head_ = 0;
  pushed_ = 0;
}

void ObservationHistory::Flatten(Eigen::Ref<Eigen::VectorXf> out) const {
  for (int k = 0; k < capacity_; ++k) {
    out.segment(static_cast<Eigen::Index>(k) * dim_, dim_) = slots_.col((head_ + k) % capacity_);
  }
}

Eigen::VectorXf ObservationHistory::Flatten() const {
  Eigen::VectorXf out(static_cast<Eigen::Index>(capacity_) * dim_);
  Flatten(out);
  return out;
}

StudentPolicy::StudentPolicy(const TeacherPolicy& teacher)
    : policy_(teacher),
      encoder_(nn::TcnSpec::Default(teacher.dims().obs_dim, teacher.dims().latent_dim),
               "student.encoder"),
      history_(kHistoryLength, teacher.dims().obs_dim) {}

void StudentPolicy::Initialize(uint64_t seed) {
  Rng rng(seed);
  encoder_.Initialize(rng);
}

nn::Matrix StudentPolicy::EncodeHistory(const nn::Matrix& histories) const {
  return encoder_.Apply(histories);
}

nn::Matrix StudentPolicy::ActionMean(const nn::Matrix& obs, const nn::Matrix& latent) const {
  return policy_.ActionMean(obs, latent);
}

Eigen::VectorXf StudentPolicy::NormalizeObservation(const Eigen::VectorXf& obs) const {
  return Normalize(obs, policy_.obs_normalizer());
}

Eigen::VectorXf StudentPolicy::Act(const Eigen::VectorXf& obs) {
  history_.Push(NormalizeObservation(obs));
  const nn::Matrix latent = encoder_.Apply(history_.Flatten());
  return policy_.ActionMean(obs, latent).col(0);
}

void StudentPolicy::ResetHistory() { history_.Reset(); }

nn::Checkpoint StudentPolicy::ToCheckpoint() const {
  nn::Checkpoint ckpt;
  ckpt.meta["kind"] = "student";
  ckpt.meta["teacher_checksum"] = TeacherChecksum();
  const nn::TcnSpec& s = encoder_.spec();
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& [stride, dilation] : s.blocks) blocks.push_back({stride, dilation});
  ckpt.meta["encoder"] = {{"seq_len", s.seq_len}, {"input_dim", s.input_dim},
                          {"output_dim", s.output_dim}, {"kernel", s.kernel},
                          {"filters", s.filters}, {"blocks", blocks}};
  std::vector<const nn::Parameter*> params;
  encoder_.CollectParameters(params);
  for (const nn::Parameter* p : params) ckpt.Add(p->name, p->value);
  return ckpt;
}

StudentPolicy StudentPolicy::FromCheckpoint(const nn::Checkpoint& ckpt,
                                            const TeacherPolicy& teacher) {
  if (ckpt.meta.value("kind", std::string()) != "student") {
    throw ConfigError("checkpoint is not a student checkpoint");
  }
  const uint32_t stored = ckpt.meta.at("teacher_checksum").get<uint32_t>();
  if (stored != teacher.PolicyChecksum()) {
    std::ostringstream msg;
    msg << "teacher checksum mismatch: student was distilled from " << std::hex << stored
        << ", teacher has " << teacher.PolicyChecksum();
    throw ConfigError(msg.str());
  }
  StudentPolicy student(teacher);
  nn::LoadParameters(ckpt, ParametersOf(student.encoder_));
  return student;
}

DistillLossTerms ComputeDistillLoss(const TeacherPolicy& policy, const nn::Matrix& obs,
                                    const nn::Matrix& teacher_actions,
                                    const nn::Matrix& teacher_latent,
                                    const nn::Matrix& student_latent) {
  const double inv_b = 1.0 / static_cast<double>(obs.cols());
  const nn::Matrix student_actions = policy.ActionMean(obs, student_latent);
  DistillLossTerms t;
  t.action = (teacher_actions - student_actions).cast<double>().squaredNorm() * inv_b;
  t.latent = (teacher_latent - student_latent).cast<double>().squaredNorm() * inv_b;
  t.total = t.action + t.latent;
  return t;
}

std::string DistillLogHeader() {
  return "iteration,action_loss,latent_loss,total_loss,episodes,falls";
}

std::string DistillLogRow(const DistillIterationLog& log) {
  std::ostringstream s;
  s << std::setprecision(9) << log.iteration << "," << log.loss.action << "," << log.loss.latent
    << "," << log.loss.total << "," << log.episodes << "," << log.falls;
  return s.str();
}

DistillResult Distill(const TeacherPolicy& teacher, const learner::TrainConfig& train_cfg,
                      const DistillConfig& cfg, uint64_t seed, const DistillOptions& options) {
  cfg.Validate();
  learner::TrainConfig tc = train_cfg;
  tc.num_envs = cfg.num_envs;
  tc.env.reward.dynamics_enabled = false;
  const uint32_t teacher_checksum = teacher.PolicyChecksum();

  DistillResult result;
  result.student = StudentPolicy(teacher);
  StudentPolicy& student = result.student;
  student.Initialize(DeriveSeed(seed, "student"));
  TeacherPolicy& policy = student.mutable_policy();
  const learner::PolicyDims& dims = policy.dims();

  auto terrain = std::make_shared<const sim::TerrainConfig>(
      sim::GenerateTerrain(tc.terrain_kind, tc.terrain_level, DeriveSeed(seed, "terrain")));
  std::vector<learner::LocomotionEnv> envs = learner::MakeEnvs(
      tc, DeriveSeed(seed, "distill"), terrain, learner::LoadActuatorNet(tc.env.actuator));
  const int n = cfg.num_envs;
  std::vector<ObservationHistory> histories(n, ObservationHistory(kHistoryLength, dims.obs_dim));

  std::vector<nn::Parameter*> params = ParametersOf(student.encoder());
  std::vector<nn::Parameter*> frozen;
  policy.PolicyParameters(frozen);
  nn::Adam optimizer(params, nn::AdamConfig{static_cast<float>(cfg.learning_rate)});
  Rng minibatch_rng(DeriveSeed(seed, "distill_minibatch"));

  std::ofstream csv;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    csv.open(std::filesystem::path(options.out_dir) / "distill_log.csv");
    if (!csv) throw ConfigError("cannot write distillation log in '" + options.out_dir + "'");
    csv << DistillLogHeader() << "\n";
  }

  const int total = cfg.horizon * n;
  const int hist_rows = kHistoryLength * dims.obs_dim;
  nn::Matrix all_hist(hist_rows, total), all_obs(dims.obs_dim, total);
  nn::Matrix all_priv(dims.privileged_dim, total);
  nn::Matrix step_hist(hist_rows, n), step_obs(dims.obs_dim, n), step_priv(dims.privileged_dim, n);
  std::vector<int> order(total);

  for (int it = 0; it < cfg.iterations; ++it) {
    DistillIterationLog log;
    log.iteration = it;
    for (int t = 0; t < cfg.horizon; ++t) {
      for (int e = 0; e < n; ++e) {
        const Eigen::VectorXf obs = envs[e].Observe();
        step_obs.col(e) = obs;
        step_priv.col(e) = envs[e].Privileged();
        histories[e].Push(student.NormalizeObservation(obs));
        histories[e].Flatten(step_hist.col(e));
      }
      const nn::Matrix actions = policy.ActionMean(step_obs, student.EncodeHistory(step_hist));
      all_hist.middleCols(t * n, n) = step_hist;
      all_obs.middleCols(t * n, n) = step_obs;
      all_priv.middleCols(t * n, n) = step_priv;
      for (int e = 0; e < n; ++e) {
        const learner::StepResult r = envs[e].Step(actions.col(e).cast<double>(), nullptr);
        if (r.done()) {
          ++log.episodes;
          if (r.fell) ++log.falls;
          envs[e].Reset();
          histories[e].Reset();
        }
      }
    }
    const nn::Matrix labels_latent = policy.Latent(all_priv);
    const nn::Matrix labels_action = policy.ActionMean(all_obs, labels_latent);

    std::iota(order.begin(), order.end(), 0);
    const int mb_size = total / cfg.minibatches;
    int count = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), minibatch_rng.engine());
      for (int mb = 0; mb < cfg.minibatches; ++mb) {
        const int begin = mb * mb_size;
        const int b = mb + 1 == cfg.minibatches ? total - begin : mb_size;
        const float inv_b = 1.0f / static_cast<float>(b);
        nn::Matrix hist(hist_rows, b), obs(dims.obs_dim, b), lat(dims.latent_dim, b);
        nn::Matrix act(dims.action_dim, b);
        for (int i = 0; i < b; ++i) {
          const int s = order[begin + i];
          hist.col(i) = all_hist.col(s);
          obs.col(i) = all_obs.col(s);
          lat.col(i) = labels_latent.col(s);
          act.col(i) = labels_action.col(s);
        }
        optimizer.ZeroGrad();
        nn::Graph g;
        const nn::NodeId latent = student.encoder().Forward(g, g.Input(hist, false));
        const learner::PolicyNodes nodes =
            policy.ForwardFromLatent(g, policy.NormalizedObs(g, obs), latent);
        const nn::Matrix act_err = g.value(nodes.action_mean) - act;
        const nn::Matrix lat_err = g.value(latent) - lat;
        const double action_term = act_err.cast<double>().squaredNorm() * inv_b;
        const double latent_term = lat_err.cast<double>().squaredNorm() * inv_b;
        if (!std::isfinite(action_term) || !std::isfinite(latent_term)) {
          throw TrainingError("distillation iteration " + std::to_string(it) +
                              ": imitation loss is not finite");
        }
        const std::pair<nn::NodeId, nn::Matrix> seeds[] = {
            {nodes.action_mean, (2.0f * inv_b) * act_err}, {latent, (2.0f * inv_b) * lat_err}};
        g.Backward(seeds);
        for (nn::Parameter* p : frozen) p->ZeroGrad();
        nn::ClipGradNorm(optimizer.params(), static_cast<float>(cfg.max_grad_norm));
        optimizer.Step();
        log.loss.action += action_term;
        log.loss.latent += latent_term;
        ++count;
      }
    }
    log.loss.action /= count;
    log.loss.latent /= count;
    log.loss.total = log.loss.action + log.loss.latent;
    if (policy.PolicyChecksum() != teacher_checksum) {
      throw TrainingError("distillation iteration " + std::to_string(it) +
                          ": frozen policy parameters changed");
    }
    if (csv.is_open()) {
      csv << DistillLogRow(log) << "\n";
      csv.flush();
    }
    if (options.on_iteration) options.on_iteration(log);
    result.log.push_back(log);
  }
  student.ResetHistory();
  if (!options.out_dir.empty()) {
    nn::Checkpoint ckpt = student.ToCheckpoint();
    ckpt.meta["seed"] = seed;
    ckpt.meta["config"] = cfg.ToJson();
    nn::SaveCheckpoint((std::filesystem::path(options.out_dir) / "student.ckpt").string(), ckpt);
  }
  return result;
}

ActionGapReport EvaluateActionGap(const StudentPolicy& student, const TeacherPolicy& teacher,
                                  const learner::TrainConfig& train_cfg, int episodes,
                                  uint64_t seed) {
  if (episodes < 1) throw ConfigError("EvaluateActionGap: episodes must be >= 1");
  learner::TrainConfig tc = train_cfg;
  tc.num_envs = episodes;
  tc.env.reward.dynamics_enabled = false;
  tc.env.randomize_initial_episode_step = false;
  auto terrain = std::make_shared<const sim::TerrainConfig>(
      sim::GenerateTerrain(tc.terrain_kind, tc.terrain_level, DeriveSeed(seed, "terrain")));
  std::vector<learner::LocomotionEnv> envs = learner::MakeEnvs(
      tc, DeriveSeed(seed, "action_gap"), terrain, learner::LoadActuatorNet(tc.env.actuator));
  const int n = episodes;
  const learner::PolicyDims& dims = teacher.dims();
  std::vector<ObservationHistory> histories(n, ObservationHistory(kHistoryLength, dims.obs_dim));
  std::vector<bool> active(n, true);
  const double scale = tc.env.action_scale;

  ActionGapReport report;
  report.episodes = episodes;
  double sum_sq = 0.0;
  int live = n;
  while (live > 0) {
    std::vector<int> ids;
    for (int e = 0; e < n; ++e) {
      if (active[e]) ids.push_back(e);
    }
    const int m = static_cast<int>(ids.size());
    nn::Matrix hist(kHistoryLength * dims.obs_dim, m), obs(dims.obs_dim, m);
    nn::Matrix priv(dims.privileged_dim, m);
    for (int k = 0; k < m; ++k) {
      const int e = ids[k];
      const Eigen::VectorXf o = envs[e].Observe();
      obs.col(k) = o;
      priv.col(k) = envs[e].Privileged();
      histories[e].Push(student.NormalizeObservation(o));
      histories[e].Flatten(hist.col(k));
    }
    const nn::Matrix student_act = student.ActionMean(obs, student.EncodeHistory(hist));
    const nn::Matrix teacher_act = teacher.ActionMean(obs, teacher.Latent(priv));
    const nn::Matrix gap = scale * (student_act - teacher_act);
    sum_sq += gap.cast<double>().squaredNorm();
    report.max_rad = std::max(report.max_rad, static_cast<double>(gap.cwiseAbs().maxCoeff()));
    report.steps += m;
    for (int k = 0; k < m; ++k) {
      const int e = ids[k];
      if (envs[e].Step(student_act.col(k).cast<double>(), nullptr).done()) {
        active[e] = false;
        --live;
      }
    }
  }
  report.rms_rad = std::sqrt(sum_sq / (static_cast<double>(report.steps) * dims.action_dim));
  report.teacher_unchanged = teacher.PolicyChecksum() == student.TeacherChecksum();
  return report;
}

}  // namespace dynaware::distill
