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

#ifndef DYNAWARE_NN_OPTIMIZER_H_
#define DYNAWARE_NN_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dynaware/nn/graph.h"

namespace dynaware::nn {

struct AdamConfig {
  float learning_rate = 3e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

// Adaptive-moment optimizer with bias correction. A step whose gradients
// contain a non-finite entry is skipped entirely and counted.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamConfig config);

  // Returns false when the update was skipped.
  bool Step();
  void ZeroGrad();

  void set_learning_rate(float lr) { config_.learning_rate = lr; }
  const AdamConfig& config() const { return config_; }
  int64_t step_count() const { return steps_; }
  int64_t skipped_steps() const { return skipped_; }
  std::span<Parameter* const> params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  AdamConfig config_;
  int64_t steps_ = 0;
  int64_t skipped_ = 0;
};

// Scales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
float ClipGradNorm(std::span<Parameter* const> params, float max_norm);

}  // namespace dynaware::nn

#endif  // DYNAWARE_NN_OPTIMIZER_H_
