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

#ifndef DYNAWARE_DISTILL_DISTILLER_H_
#define DYNAWARE_DISTILL_DISTILLER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "dynaware/learner/policy.h"
#include "dynaware/learner/ppo.h"
#include "dynaware/nn/checkpoint.h"
#include "dynaware/nn/modules.h"

namespace dynaware {
class KvConfig;
}

namespace dynaware::distill {

inline constexpr int kHistoryLength = 100;

struct DistillConfig {
  int num_envs = 64;
  int horizon = 24;  // student steps per environment per iteration
  int iterations = 500;
  int epochs = 2;
  int minibatches = 4;
  double learning_rate = 1e-3;
  double max_grad_norm = 1.0;
  int eval_episodes = 10;
  double action_gap_threshold = 0.05;  // rad RMS

  // Reads "distill.*" keys on top of the defaults.
  static DistillConfig FromConfig(const KvConfig& config);
  void Validate() const;
  nlohmann::json ToJson() const;
};

// Fixed-capacity ring of the most recent observations. Slots not yet written
// read as zeros.
class ObservationHistory {
 public:
  ObservationHistory() = default;
  ObservationHistory(int capacity, int dim);

  void Push(const Eigen::VectorXf& obs);
  void Reset();
  // Time-major (capacity * dim), oldest first, newest in the last block.
  void Flatten(Eigen::Ref<Eigen::VectorXf> out) const;
  Eigen::VectorXf Flatten() const;

  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  int pushed() const { return pushed_; }

 private:
  int capacity_ = 0;
  int dim_ = 0;
  int head_ = 0;  // slot of the next write
  int pushed_ = 0;
  Eigen::MatrixXf slots_;
};

// Frozen teacher policy paired with a TCN history encoder.
class StudentPolicy {
 public:
  StudentPolicy() = default;
  explicit StudentPolicy(const learner::TeacherPolicy& teacher);

  void Initialize(uint64_t seed);

  // histories: (T * obs_dim) x batch of normalized observations.
  nn::Matrix EncodeHistory(const nn::Matrix& histories) const;
  nn::Matrix ActionMean(const nn::Matrix& obs, const nn::Matrix& latent) const;

  // Stateful single-stream interface: pushes `obs` into the history and
  // returns the action only.
  Eigen::VectorXf Act(const Eigen::VectorXf& obs);
  void ResetHistory();
  Eigen::VectorXf NormalizeObservation(const Eigen::VectorXf& obs) const;

  const learner::TeacherPolicy& policy() const { return policy_; }
  learner::TeacherPolicy& mutable_policy() { return policy_; }
  nn::Tcn& encoder() { return encoder_; }
  const nn::Tcn& encoder() const { return encoder_; }
  const ObservationHistory& history() const { return history_; }
  uint32_t TeacherChecksum() const { return policy_.PolicyChecksum(); }

  nn::Checkpoint ToCheckpoint() const;
  // Throws ConfigError unless `teacher` matches the stored checksum.
  static StudentPolicy FromCheckpoint(const nn::Checkpoint& ckpt,
                                      const learner::TeacherPolicy& teacher);

 private:
  learner::TeacherPolicy policy_;
  nn::Tcn encoder_;
  ObservationHistory history_;
};

struct DistillLossTerms {
  double action = 0.0;  // mean ||a - â||²
  double latent = 0.0;  // mean ||l - l̂||²
  double total = 0.0;
};

// Evaluates the imitation loss for a batch; raw observations, teacher labels.
DistillLossTerms ComputeDistillLoss(const learner::TeacherPolicy& policy, const nn::Matrix& obs,
                                    const nn::Matrix& teacher_actions,
                                    const nn::Matrix& teacher_latent,
                                    const nn::Matrix& student_latent);

struct DistillIterationLog {
  int iteration = 0;
  DistillLossTerms loss;
  int episodes = 0;
  int falls = 0;
};

std::string DistillLogHeader();
std::string DistillLogRow(const DistillIterationLog& log);

struct DistillOptions {
  std::string out_dir;  // empty: no files
  std::function<void(const DistillIterationLog&)> on_iteration;
};

struct DistillResult {
  StudentPolicy student;
  std::vector<DistillIterationLog> log;
};

// DAgger: rolls out the student, labels every visited state with the teacher,
// and fits the history encoder only.
DistillResult Distill(const learner::TeacherPolicy& teacher, const learner::TrainConfig& train_cfg,
                      const DistillConfig& cfg, uint64_t seed, const DistillOptions& options = {});

struct ActionGapReport {
  int episodes = 0;
  int steps = 0;
  double rms_rad = 0.0;   // RMS over steps and joints of the joint-target gap
  double max_rad = 0.0;
  bool teacher_unchanged = false;
};

// Rolls out the student for `episodes` full episodes and compares its joint
// targets with the teacher's on every visited state.
ActionGapReport EvaluateActionGap(const StudentPolicy& student,
                                  const learner::TeacherPolicy& teacher,
                                  const learner::TrainConfig& train_cfg, int episodes,
                                  uint64_t seed);

}  // namespace dynaware::distill

#endif  // DYNAWARE_DISTILL_DISTILLER_H_
