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

#include "dynaware/nn/modules.h"

#include <Eigen/QR>

#include "dynaware/common/error.h"

namespace dynaware::nn {

void OrthogonalInit(Matrix& weight, float gain, Rng& rng) {
  const Eigen::Index rows = weight.rows(), cols = weight.cols();
  const Eigen::Index big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd gaussian(big, small);
  for (Eigen::Index j = 0; j < small; ++j) {
    for (Eigen::Index i = 0; i < big; ++i) gaussian(i, j) = rng.Normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Sign fix so the distribution is uniform over orthogonal matrices.
  const Eigen::MatrixXd r = qr.matrixQR();
  for (Eigen::Index j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (rows >= cols) {
    weight = (gain * q).cast<float>();
  } else {
    weight = (gain * q.transpose()).cast<float>();
  }
}

LinearLayer::LinearLayer(std::string name, int in, int out)
    : weight_(name + ".weight", out, in), bias_(name + ".bias", out, 1) {}

Matrix LinearLayer::Apply(const Matrix& x) const {
  if (x.rows() != weight_.value.cols()) {
    throw ConfigError("Linear '" + weight_.name + "': input has " + std::to_string(x.rows()) +
                      " features, expected " + std::to_string(weight_.value.cols()));
  }
  Matrix out = weight_.value * x;
  out.colwise() += bias_.value.col(0);
  return out;
}

void LinearLayer::Initialize(float gain, Rng& rng) {
  OrthogonalInit(weight_.value, gain, rng);
  bias_.value.setZero();
  weight_.MarkUpdated();
  bias_.MarkUpdated();
}

MlpSpec MlpSpec::Policy(int obs_dim, int latent_dim, int action_dim, int torque_dim) {
  return MlpSpec{obs_dim + latent_dim, {512, 256, 128}, action_dim + torque_dim};
}

MlpSpec MlpSpec::Adaptation(int privileged_dim, int latent_dim) {
  return MlpSpec{privileged_dim, {256, 128}, latent_dim};
}

void MlpSpec::Validate() const {
  if (input_dim <= 0) throw ConfigError("MlpSpec: input_dim must be > 0");
  if (output_dim < 0) throw ConfigError("MlpSpec: output_dim must be >= 0");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("MlpSpec: hidden sizes must be > 0");
  }
}

Mlp::Mlp(const MlpSpec& spec, const std::string& name) : spec_(spec) {
  spec_.Validate();
  int in = spec.input_dim;
  for (size_t i = 0; i < spec.hidden.size(); ++i) {
    layers_.emplace_back(name + ".hidden" + std::to_string(i), in, spec.hidden[i]);
    in = spec.hidden[i];
  }
  layers_.emplace_back(name + ".out", in, spec.output_dim);
}

void Mlp::Initialize(Rng& rng, float hidden_gain, float output_gain) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].Initialize(i + 1 == layers_.size() ? output_gain : hidden_gain, rng);
  }
}

NodeId Mlp::Forward(Graph& g, NodeId x) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].Forward(g, x);
    if (i + 1 < layers_.size()) x = g.Elu(x);
  }
  return x;
}

Matrix Mlp::Apply(const Matrix& x) const {
  Matrix h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].Apply(h);
    if (i + 1 < layers_.size()) h = EluApply(h);
  }
  return h;
}

void Mlp::CollectParameters(std::vector<Parameter*>& out) {
  for (auto& layer : layers_) layer.CollectParameters(out);
}

void Mlp::CollectParameters(std::vector<const Parameter*>& out) const {
  for (const auto& layer : layers_) layer.CollectParameters(out);
}

TcnSpec TcnSpec::Default(int obs_dim, int latent_dim) {
  TcnSpec s;
  s.input_dim = obs_dim;
  s.output_dim = latent_dim;
  return s;
}

std::vector<int> TcnSpec::BlockLengths() const {
  std::vector<int> lengths;
  int t = seq_len;
  for (const auto& [stride, dilation] : blocks) {
    t /= stride;
    lengths.push_back(t);
  }
  return lengths;
}

void TcnSpec::Validate() const {
  if (input_dim <= 0 || output_dim <= 0) throw ConfigError("TcnSpec: dimensions must be > 0");
  if (kernel <= 0 || filters <= 0) throw ConfigError("TcnSpec: kernel and filters must be > 0");
  if (blocks.empty()) throw ConfigError("TcnSpec: at least one block required");
  for (const auto& [stride, dilation] : blocks) {
    if (stride <= 0 || dilation <= 0) throw ConfigError("TcnSpec: stride and dilation must be > 0");
  }
  for (int len : BlockLengths()) {
    if (len < 1) {
      throw ConfigError("TcnSpec: sequence length " + std::to_string(seq_len) +
                        " is too short for the stride schedule");
    }
  }
}

Tcn::Tcn(const TcnSpec& spec, const std::string& name) : spec_(spec) {
  spec_.Validate();
  int channels = spec.input_dim;
  int length = spec.seq_len;
  for (size_t b = 0; b < spec.blocks.size(); ++b) {
    const auto [stride, dilation] = spec.blocks[b];
    ConvShape shape{channels, spec.filters, spec.kernel, stride, dilation, length};
    shapes_.push_back(shape);
    const std::string prefix = name + ".block" + std::to_string(b);
    conv_weights_.emplace_back(prefix + ".weight", spec.filters, spec.kernel * channels);
    conv_biases_.emplace_back(prefix + ".bias", spec.filters, 1);
    channels = spec.filters;
    length = shape.out_length();
  }
  output_ = LinearLayer(name + ".out", length * channels, spec.output_dim);
  norm_gain_ = Parameter(name + ".norm.gain", spec.output_dim, 1);
  norm_gain_.value.setOnes();
  norm_bias_ = Parameter(name + ".norm.bias", spec.output_dim, 1);
}

void Tcn::Initialize(Rng& rng) {
  for (size_t b = 0; b < conv_weights_.size(); ++b) {
    OrthogonalInit(conv_weights_[b].value, 1.41421356f, rng);
    conv_biases_[b].value.setZero();
    conv_weights_[b].MarkUpdated();
    conv_biases_[b].MarkUpdated();
  }
  output_.Initialize(1.0f, rng);
  norm_gain_.value.setOnes();
  norm_bias_.value.setZero();
  norm_gain_.MarkUpdated();
  norm_bias_.MarkUpdated();
}

NodeId Tcn::Forward(Graph& g, NodeId history) {
  NodeId x = history;
  for (size_t b = 0; b < shapes_.size(); ++b) {
    x = g.Conv1d(x, conv_weights_[b], conv_biases_[b], shapes_[b]);
    x = g.Elu(x);
  }
  x = output_.Forward(g, x);
  return g.LayerNorm(x, norm_gain_, norm_bias_);
}

Matrix Tcn::Apply(const Matrix& history) const {
  Matrix x = history;
  for (size_t b = 0; b < shapes_.size(); ++b) {
    x = Conv1dApply(x, conv_weights_[b].value, conv_biases_[b].value, shapes_[b]);
    x = EluApply(x);
  }
  return LayerNormApply(output_.Apply(x), norm_gain_.value, norm_bias_.value);
}

void Tcn::CollectParameters(std::vector<Parameter*>& out) {
  for (size_t b = 0; b < conv_weights_.size(); ++b) {
    out.push_back(&conv_weights_[b]);
    out.push_back(&conv_biases_[b]);
  }
  output_.CollectParameters(out);
  out.push_back(&norm_gain_);
  out.push_back(&norm_bias_);
}

void Tcn::CollectParameters(std::vector<const Parameter*>& out) const {
  for (size_t b = 0; b < conv_weights_.size(); ++b) {
    out.push_back(&conv_weights_[b]);
    out.push_back(&conv_biases_[b]);
  }
  output_.CollectParameters(out);
  out.push_back(&norm_gain_);
  out.push_back(&norm_bias_);
}

}  // namespace dynaware::nn
