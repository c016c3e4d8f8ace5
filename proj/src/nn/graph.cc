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

#include "dynaware/nn/graph.h"

#include <cmath>
#include <utility>

#include "dynaware/common/error.h"

namespace dynaware::nn {

namespace {

// Receptive window of output o as a (kernel*in_channels) x batch matrix;
// taps before t = 0 are zero (causal left padding).
void GatherWindow(const Matrix& src, const ConvShape& shape, int o, Matrix& window) {
  const int cin = shape.in_channels, k = shape.kernel;
  const int first = shape.OutputTime(o) - (k - 1) * shape.dilation;
  if (shape.dilation == 1 && first >= 0) {
    window = src.middleRows(static_cast<Eigen::Index>(first) * cin,
                            static_cast<Eigen::Index>(k) * cin);
    return;
  }
  window.resize(static_cast<Eigen::Index>(k) * cin, src.cols());
  for (int tap = 0; tap < k; ++tap) {
    const int ti = first + tap * shape.dilation;
    if (ti < 0) {
      window.middleRows(static_cast<Eigen::Index>(tap) * cin, cin).setZero();
    } else {
      window.middleRows(static_cast<Eigen::Index>(tap) * cin, cin) =
          src.middleRows(static_cast<Eigen::Index>(ti) * cin, cin);
    }
  }
}

}  // namespace

float Elu(float x) { return x >= 0.0f ? x : std::expm1(x); }

Matrix EluApply(const Matrix& x) {
  return (x.array().max(0.0f) + x.array().min(0.0f).exp() - 1.0f).matrix();
}

Matrix Conv1dApply(const Matrix& in, const Matrix& weight, const Matrix& bias,
                   const ConvShape& shape) {
  const int cout = shape.out_channels;
  const int tout = shape.out_length();
  Matrix out(static_cast<Eigen::Index>(tout) * cout, in.cols());
  Matrix window;
  for (int o = 0; o < tout; ++o) {
    GatherWindow(in, shape, o, window);
    auto block = out.middleRows(static_cast<Eigen::Index>(o) * cout, cout);
    block.noalias() = weight * window;
    block.colwise() += bias.col(0);
  }
  return out;
}

Matrix LayerNormApply(const Matrix& in, const Matrix& gain, const Matrix& bias, float eps) {
  const float n = static_cast<float>(in.rows());
  Eigen::RowVectorXf mean = in.colwise().sum() / n;
  Matrix centered = in.rowwise() - mean;
  Eigen::RowVectorXf inv_std =
      ((centered.array().square().colwise().sum() / n) + eps).sqrt().inverse().matrix();
  Matrix out = (centered.array().rowwise() * inv_std.array()).colwise() * gain.col(0).array();
  out.colwise() += bias.col(0);
  return out;
}

NodeId Graph::Push(Matrix value, std::function<void()> backward) {
  if (consumed_) throw UsageError("Graph: cannot record onto a consumed graph");
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward)});
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Graph::Accumulate(NodeId id, const Matrix& g) {
  if (!nodes_[id].needs_grad) return;
  Matrix& dst = nodes_[id].grad;
  if (dst.size() == 0) {
    dst = g;
  } else {
    dst += g;
  }
}

void Graph::Accumulate(NodeId id, Matrix&& g) {
  if (!nodes_[id].needs_grad) return;
  Matrix& dst = nodes_[id].grad;
  if (dst.size() == 0) {
    dst = std::move(g);
  } else {
    dst += g;
  }
}

NodeId Graph::Input(Matrix value, bool requires_grad) {
  const NodeId id = Push(std::move(value), nullptr);
  nodes_[id].needs_grad = requires_grad;
  return id;
}

NodeId Graph::Linear(NodeId x, Parameter& weight, Parameter& bias) {
  const Matrix& in = value(x);
  if (in.rows() != weight.value.cols()) {
    throw ConfigError("Linear '" + weight.name + "': input has " + std::to_string(in.rows()) +
                      " features, expected " + std::to_string(weight.value.cols()));
  }
  Use(weight);
  Use(bias);
  Matrix out = weight.value * in;
  out.colwise() += bias.value.col(0);
  const NodeId id = static_cast<NodeId>(nodes_.size());
  return Push(std::move(out), [this, id, x, &weight, &bias]() {
    const Matrix& g = nodes_[id].grad;
    weight.grad.noalias() += g * nodes_[x].value.transpose();
    bias.grad.col(0).noalias() += g * Vector::Ones(g.cols());
    if (nodes_[x].needs_grad) Accumulate(x, Matrix(weight.value.transpose() * g));
  });
}

NodeId Graph::Elu(NodeId x) {
  Matrix out = EluApply(value(x));
  const NodeId id = static_cast<NodeId>(nodes_.size());
  return Push(std::move(out), [this, id, x]() {
    // d elu / dx = 1 for x >= 0 and e^x = y + 1 otherwise.
    const Matrix& y = nodes_[id].value;
    Accumulate(x, Matrix(nodes_[id].grad.array() * (y.array().min(0.0f) + 1.0f)));
  });
}

NodeId Graph::Clamp(NodeId x, float lo, float hi) {
  Matrix out = value(x).cwiseMax(lo).cwiseMin(hi);
  const NodeId id = static_cast<NodeId>(nodes_.size());
  return Push(std::move(out), [this, id, x, lo, hi]() {
    const Matrix& in = nodes_[x].value;
    Matrix d = nodes_[id].grad;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const float v = in.data()[i];
      if (v < lo || v > hi) d.data()[i] = 0.0f;
    }
    Accumulate(x, std::move(d));
  });
}

NodeId Graph::Conv1d(NodeId x, Parameter& weight, Parameter& bias, const ConvShape& shape) {
  const Matrix& in = value(x);
  const int cin = shape.in_channels, cout = shape.out_channels, k = shape.kernel;
  if (in.rows() != static_cast<Eigen::Index>(shape.in_length) * cin) {
    throw ConfigError("Conv1d '" + weight.name + "': input rows " + std::to_string(in.rows()) +
                      " do not match length*channels " +
                      std::to_string(shape.in_length * cin));
  }
  if (weight.value.rows() != cout || weight.value.cols() != k * cin) {
    throw ConfigError("Conv1d '" + weight.name + "': weight shape mismatch");
  }
  if (shape.out_length() < 1) throw ConfigError("Conv1d '" + weight.name + "': empty output");
  Use(weight);
  Use(bias);
  const int tout = shape.out_length();
  Matrix out = Conv1dApply(in, weight.value, bias.value, shape);

  const NodeId id = static_cast<NodeId>(nodes_.size());
  return Push(std::move(out), [this, id, x, &weight, &bias, shape, cin, cout, k, tout]() {
    const Matrix& src = nodes_[x].value;
    const Matrix& g = nodes_[id].grad;
    const bool want_dx = nodes_[x].needs_grad;
    Matrix dx;
    if (want_dx) dx = Matrix::Zero(src.rows(), src.cols());
    Matrix window, dwindow;
    for (int o = 0; o < tout; ++o) {
      const auto go = g.middleRows(static_cast<Eigen::Index>(o) * cout, cout);
      GatherWindow(src, shape, o, window);
      weight.grad.noalias() += go * window.transpose();
      bias.grad.col(0) += go.rowwise().sum();
      if (!want_dx) continue;
      dwindow.noalias() = weight.value.transpose() * go;
      const int first = shape.OutputTime(o) - (k - 1) * shape.dilation;
      for (int tap = 0; tap < k; ++tap) {
        const int ti = first + tap * shape.dilation;
        if (ti < 0) continue;
        dx.middleRows(static_cast<Eigen::Index>(ti) * cin, cin) +=
            dwindow.middleRows(static_cast<Eigen::Index>(tap) * cin, cin);
      }
    }
    if (want_dx) Accumulate(x, std::move(dx));
  });
}

NodeId Graph::LayerNorm(NodeId x, Parameter& gain, Parameter& bias, float eps) {
  const Matrix& in = value(x);
  if (in.rows() != gain.value.rows()) {
    throw ConfigError("LayerNorm '" + gain.name + "': feature count mismatch");
  }
  Use(gain);
  Use(bias);
  const float n = static_cast<float>(in.rows());
  Eigen::RowVectorXf mean = in.colwise().sum() / n;
  Matrix centered = in.rowwise() - mean;
  Eigen::RowVectorXf inv_std =
      ((centered.array().square().colwise().sum() / n) + eps).sqrt().inverse().matrix();
  Matrix normalized = centered.array().rowwise() * inv_std.array();
  Matrix out = (normalized.array().colwise() * gain.value.col(0).array()).matrix();
  out.colwise() += bias.value.col(0);
  const NodeId id = static_cast<NodeId>(nodes_.size());
  return Push(std::move(out), [this, id, x, &gain, &bias, normalized = std::move(normalized),
                               inv_std = std::move(inv_std), n]() {
    const Matrix& g = nodes_[id].grad;
    gain.grad.col(0) += (g.array() * normalized.array()).rowwise().sum().matrix();
    bias.grad.col(0) += g.rowwise().sum();
    Matrix gn = (g.array().colwise() * gain.value.col(0).array()).matrix();
    Eigen::RowVectorXf mean_g = gn.colwise().sum() / n;
    Eigen::RowVectorXf mean_gx = (gn.array() * normalized.array()).colwise().sum().matrix() / n;
    Matrix dx = gn.rowwise() - mean_g;
    dx -= (normalized.array().rowwise() * mean_gx.array()).matrix();
    dx = (dx.array().rowwise() * inv_std.array()).matrix();
    Accumulate(x, std::move(dx));
  });
}

NodeId Graph::Concat(NodeId a, NodeId b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.cols() != vb.cols()) throw ConfigError("Concat: batch size mismatch");
  Matrix out(va.rows() + vb.rows(), va.cols());
  out << va, vb;
  const NodeId id = static_cast<NodeId>(nodes_.size());
  const Eigen::Index ra = va.rows(), rb = vb.rows();
  return Push(std::move(out), [this, id, a, b, ra, rb]() {
    const Matrix& g = nodes_[id].grad;
    Accumulate(a, g.topRows(ra));
    Accumulate(b, g.bottomRows(rb));
  });
}

NodeId Graph::Normalize(NodeId x, const Vector& shift, const Vector& scale) {
  const Matrix& in = value(x);
  if (in.rows() != shift.size() || in.rows() != scale.size()) {
    throw ConfigError("Normalize: feature count mismatch");
  }
  Matrix out = ((in.colwise() - shift).array().colwise() * scale.array()).matrix();
  const NodeId id = static_cast<NodeId>(nodes_.size());
  return Push(std::move(out), [this, id, x, scale]() {
    Accumulate(x, Matrix(nodes_[id].grad.array().colwise() * scale.array()));
  });
}

NodeId Graph::Sum(NodeId x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).sum();
  const NodeId id = static_cast<NodeId>(nodes_.size());
  return Push(std::move(out), [this, id, x]() {
    const Matrix& in = nodes_[x].value;
    Accumulate(x, Matrix::Constant(in.rows(), in.cols(), nodes_[id].grad(0, 0)));
  });
}

void Graph::Backward(NodeId output, const Matrix& output_grad) {
  std::pair<NodeId, Matrix> seed{output, output_grad};
  Backward(std::span<const std::pair<NodeId, Matrix>>(&seed, 1));
}

void Graph::Backward(std::span<const std::pair<NodeId, Matrix>> seeds) {
  if (consumed_) throw UsageError("Graph::Backward: graph already consumed");
  for (const ParamUse& use : uses_) {
    if (use.param->version != use.version) {
      throw UsageError("Graph::Backward: parameter '" + use.param->name +
                       "' changed since the forward pass (stale graph)");
    }
  }
  NodeId last = -1;
  for (const auto& [id, g] : seeds) {
    if (id < 0 || id >= size()) throw UsageError("Graph::Backward: unknown node");
    if (g.rows() != nodes_[id].value.rows() || g.cols() != nodes_[id].value.cols()) {
      throw UsageError("Graph::Backward: seed gradient shape mismatch");
    }
    Accumulate(id, g);
    last = std::max(last, id);
  }
  consumed_ = true;
  for (NodeId id = last; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0 || !node.backward) continue;
    node.backward();
  }
}

}  // namespace dynaware::nn
