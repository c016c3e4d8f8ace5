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

#ifndef DYNAWARE_NN_MODULES_H_
#define DYNAWARE_NN_MODULES_H_

#include <string>
#include <utility>
#include <vector>

#include "dynaware/common/rng.h"
#include "dynaware/nn/graph.h"

namespace dynaware::nn {

// Orthogonal initialization scaled by `gain` (Gaussian matrix → QR).
void OrthogonalInit(Matrix& weight, float gain, Rng& rng);

class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(std::string name, int in, int out);

  NodeId Forward(Graph& g, NodeId x) { return g.Linear(x, weight_, bias_); }
  Matrix Apply(const Matrix& x) const;
  void Initialize(float gain, Rng& rng);
  void CollectParameters(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  void CollectParameters(std::vector<const Parameter*>& out) const {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  int in_dim() const { return static_cast<int>(weight_.value.cols()); }
  int out_dim() const { return static_cast<int>(weight_.value.rows()); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
};

// Linear+ELU hidden layers followed by a linear output layer.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;

  // Policy trunk+heads: hidden 512/256/128, output n_a + n_tau.
  static MlpSpec Policy(int obs_dim, int latent_dim, int action_dim, int torque_dim);
  // Privileged encoder ("adaptation module"): hidden 256/128, output n_l.
  static MlpSpec Adaptation(int privileged_dim, int latent_dim);
  void Validate() const;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(const MlpSpec& spec, const std::string& name);

  // Hidden layers use `hidden_gain`, the output layer `output_gain`.
  void Initialize(Rng& rng, float hidden_gain = 1.41421356f, float output_gain = 0.01f);
  NodeId Forward(Graph& g, NodeId x);
  Matrix Apply(const Matrix& x) const;
  void CollectParameters(std::vector<Parameter*>& out);
  void CollectParameters(std::vector<const Parameter*>& out) const;

  const MlpSpec& spec() const { return spec_; }
  std::vector<LinearLayer>& layers() { return layers_; }
  const std::vector<LinearLayer>& layers() const { return layers_; }

 private:
  MlpSpec spec_;
  std::vector<LinearLayer> layers_;
};

// Temporal convolutional history encoder.
struct TcnSpec {
  int seq_len = 100;
  int input_dim = 0;
  std::vector<std::pair<int, int>> blocks = {{1, 1}, {2, 1}, {1, 2}, {2, 1}, {1, 4}, {2, 1}};  // (stride, dilation)
  int kernel = 5;
  int filters = 32;
  int output_dim = 0;

  static TcnSpec Default(int obs_dim, int latent_dim);
  // Temporal length after each block.
  std::vector<int> BlockLengths() const;
  // Throws ConfigError if a block would produce an empty sequence.
  void Validate() const;
};

class Tcn {
 public:
  Tcn() = default;
  Tcn(const TcnSpec& spec, const std::string& name);

  void Initialize(Rng& rng);
  // history: (seq_len * input_dim) x batch, time-major, oldest first.
  NodeId Forward(Graph& g, NodeId history);
  Matrix Apply(const Matrix& history) const;
  void CollectParameters(std::vector<Parameter*>& out);
  void CollectParameters(std::vector<const Parameter*>& out) const;

  const TcnSpec& spec() const { return spec_; }

 private:
  TcnSpec spec_;
  std::vector<Parameter> conv_weights_;
  std::vector<Parameter> conv_biases_;
  std::vector<ConvShape> shapes_;
  LinearLayer output_;
  Parameter norm_gain_;
  Parameter norm_bias_;
};

}  // namespace dynaware::nn

#endif  // DYNAWARE_NN_MODULES_H_
