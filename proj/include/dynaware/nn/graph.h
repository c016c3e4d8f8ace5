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

#ifndef DYNAWARE_NN_GRAPH_H_
#define DYNAWARE_NN_GRAPH_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dynaware::nn {

// Activations are stored feature-major: one column per sample.
using Matrix = Eigen::MatrixXf;
using Vector = Eigen::VectorXf;

// A named trainable tensor with paired gradient storage. `version` is bumped
// whenever the value is overwritten so graphs recorded against an older value
// can be detected.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(name)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  std::string name;
  Matrix value;
  Matrix grad;
  uint64_t version = 0;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
  void MarkUpdated() { ++version; }
};

using NodeId = int;

// Geometry of a causal 1-D convolution over a time-major flattened sequence
// (row index t * channels + c). Outputs are aligned to the newest input: with
// stride s the output count is floor(T / s) and the last output sits on t = T-1.
struct ConvShape {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int in_length = 0;
  int out_length() const { return in_length / stride; }
  // Input time index of output position o.
  int OutputTime(int o) const { return in_length - 1 - (out_length() - 1 - o) * stride; }
};

// Tape of tensor operations supporting one reverse pass. Parameter gradients
// are accumulated into Parameter::grad. Backward on a graph that was already
// consumed, or whose parameters changed since recording, throws UsageError.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Inputs created with requires_grad = false receive no gradient.
  NodeId Input(Matrix value, bool requires_grad = true);
  NodeId Linear(NodeId x, Parameter& weight, Parameter& bias);
  NodeId Elu(NodeId x);
  NodeId Clamp(NodeId x, float lo, float hi);
  NodeId Conv1d(NodeId x, Parameter& weight, Parameter& bias, const ConvShape& shape);
  NodeId LayerNorm(NodeId x, Parameter& gain, Parameter& bias, float eps = 1e-5f);
  // Row-wise concatenation [a; b].
  NodeId Concat(NodeId a, NodeId b);
  // (x - shift) .* scale, per row; constants.
  NodeId Normalize(NodeId x, const Vector& shift, const Vector& scale);
  // Sum of all entries as a 1x1 node.
  NodeId Sum(NodeId x);

  const Matrix& value(NodeId id) const { return nodes_.at(id).value; }
  // Gradient of a node after Backward; zero-sized if nothing flowed into it.
  const Matrix& grad(NodeId id) const { return nodes_.at(id).grad; }
  int size() const { return static_cast<int>(nodes_.size()); }
  bool consumed() const { return consumed_; }

  void Backward(NodeId output, const Matrix& output_grad);
  void Backward(std::span<const std::pair<NodeId, Matrix>> seeds);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backward;
    bool needs_grad = true;
  };
  struct ParamUse {
    const Parameter* param;
    uint64_t version;
  };

  NodeId Push(Matrix value, std::function<void()> backward);
  void Accumulate(NodeId id, const Matrix& g);
  void Accumulate(NodeId id, Matrix&& g);
  void Use(const Parameter& p) { uses_.push_back({&p, p.version}); }

  std::vector<Node> nodes_;
  std::vector<ParamUse> uses_;
  bool consumed_ = false;
};

float Elu(float x);
// Elementwise ELU of a matrix (vectorized).
Matrix EluApply(const Matrix& x);

// Stateless forward kernels shared by Graph and the inference paths.
Matrix Conv1dApply(const Matrix& in, const Matrix& weight, const Matrix& bias,
                   const ConvShape& shape);
Matrix LayerNormApply(const Matrix& in, const Matrix& gain, const Matrix& bias, float eps = 1e-5f);

}  // namespace dynaware::nn

#endif  // DYNAWARE_NN_GRAPH_H_
