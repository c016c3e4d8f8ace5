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

#include "dynaware/nn/optimizer.h"

#include <cmath>

#include "dynaware/common/error.h"

namespace dynaware::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (Parameter* p : params_) {
    first_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    second_moment_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

bool Adam::Step() {
  for (Parameter* p : params_) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) {
      throw ConfigError("Adam: gradient shape mismatch for '" + p->name + "'");
    }
    if (!p->grad.allFinite()) {
      ++skipped_;
      return false;
    }
  }
  ++steps_;
  const float b1 = config_.beta1, b2 = config_.beta2;
  const float correction1 = 1.0f - std::pow(b1, static_cast<float>(steps_));
  const float correction2 = 1.0f - std::pow(b2, static_cast<float>(steps_));
  const float step_size = config_.learning_rate / correction1;
  const float inv_sqrt_c2 = 1.0f / std::sqrt(correction2);
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    first_moment_[i] = b1 * first_moment_[i] + (1.0f - b1) * p.grad;
    second_moment_[i] = b2 * second_moment_[i] + (1.0f - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= step_size * first_moment_[i].array() /
                       (second_moment_[i].array().sqrt() * inv_sqrt_c2 + config_.epsilon);
    p.MarkUpdated();
  }
  return true;
}

void Adam::ZeroGrad() {
  for (Parameter* p : params_) p->ZeroGrad();
}

float ClipGradNorm(std::span<Parameter* const> params, float max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += static_cast<double>(p->grad.squaredNorm());
  const float norm = static_cast<float>(std::sqrt(sq));
  if (std::isfinite(norm) && norm > max_norm && norm > 0.0f) {
    const float scale = max_norm / (norm + 1e-6f);
    for (Parameter* p : params) p->grad *= scale;
  }
  return norm;
}

}  // namespace dynaware::nn
