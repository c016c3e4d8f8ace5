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

#ifndef DYNAWARE_TESTS_SUPPORT_GRAD_CHECK_H_
#define DYNAWARE_TESTS_SUPPORT_GRAD_CHECK_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dynaware/common/rng.h"
#include "dynaware/nn/graph.h"

namespace dynaware::testsupport {

using MatD = Eigen::MatrixXd;

// Double-precision reference implementations of the layers.
double EluD(double x);
MatD EluD(const MatD& x);
MatD LinearD(const MatD& x, const MatD& w, const MatD& b);
MatD Conv1dD(const MatD& x, const MatD& w, const MatD& b, const nn::ConvShape& s);
MatD LayerNormD(const MatD& x, const MatD& gain, const MatD& bias, double eps = 1e-5);

MatD RandomMat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0);
int RandInt(Rng& rng, int lo, int hi);

struct Built {
  nn::NodeId out = -1;
  std::vector<nn::Parameter*> params;
  std::shared_ptr<void> keep_alive;
};

// The first `num_inputs` tensors become graph inputs, the rest parameters.
// The scalar objective is sum(seed .* output).
struct GradCase {
  std::vector<MatD> tensors;
  int num_inputs = 1;
  std::function<MatD(const std::vector<MatD>&)> oracle;
  std::function<Built(nn::Graph&, const std::vector<nn::NodeId>&, const std::vector<nn::Matrix>&)>
      build;
};

struct GradCheckResult {
  double forward_error = 0.0;  // max abs difference against the oracle
  double grad_error = 0.0;     // worst relative error over all tensors
};
GradCheckResult CheckGradients(const GradCase& c, Rng& rng);

struct GradSuite {
  std::string name;
  std::function<GradCase(Rng&)> make;
};
// One suite per graph operation and composite module.
std::vector<GradSuite> LayerGradSuites();

struct SuiteResult {
  int instances = 0;
  double worst_forward = 0.0;
  double worst_grad = 0.0;
};
SuiteResult RunGradientSuite(const GradSuite& suite, int instances);

}  // namespace dynaware::testsupport

#endif  // DYNAWARE_TESTS_SUPPORT_GRAD_CHECK_H_
