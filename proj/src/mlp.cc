/*
 * Copyright 2026 The MTDML Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mtdml/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "mtdml/error.hpp"

namespace mtdml {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
    case Activation::kSoftplus:
      return "softplus";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  if (name == "softplus") return Activation::kSoftplus;
  throw ConfigError("unknown activation '" + name + "'");
}

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kIdentity:
      return z;
    case Activation::kSoftplus:
      return softplus(z);
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::kRelu:
      return z > 0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kIdentity:
      return 1.0;
    case Activation::kSoftplus:
      return sigmoid(z);
  }
  return 1.0;
}

// z = x * W + b.
Tensor2 affine(const Tensor2& x, const DenseLayer& layer) {
  Tensor2 z = matmul(x, layer.weight);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return z;
}

Tensor2 apply_activation(Activation a, const Tensor2& z) {
  Tensor2 out = z;
  if (a == Activation::kIdentity) return out;
  for (double& v : out.values()) v = activate(a, v);
  return out;
}

}  // namespace

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw ConfigError("MlpSpec: need at least one layer (two widths)");
  }
  if (activations.size() != layer_widths.size() - 1) {
    throw ConfigError("MlpSpec: " + std::to_string(activations.size()) +
                      " activations for " +
                      std::to_string(layer_widths.size() - 1) + " layers");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw ConfigError("MlpSpec: layer width must be >= 1");
  }
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    const std::size_t in = spec_.layer_widths[l];
    const std::size_t out = spec_.layer_widths[l + 1];
    DenseLayer layer;
    layer.weight = Tensor2(in, out);
    layer.bias.assign(out, 0.0);
    layer.grad_weight = Tensor2(in, out);
    layer.grad_bias.assign(out, 0.0);
    layer.activation = spec_.activations[l];
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(MlpSpec spec, std::mt19937_64& rng) : Mlp(std::move(spec)) {
  for (DenseLayer& layer : layers_) {
    const double fan = static_cast<double>(layer.weight.rows() + layer.weight.cols());
    const double limit = std::sqrt(6.0 / fan);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weight.values()) w = dist(rng);
  }
}

void Mlp::check_input(const Tensor2& x) const {
  if (layers_.empty()) throw StateError("Mlp: network has no layers");
  if (x.cols() != input_width()) {
    throw DimensionError("Mlp: input has " + std::to_string(x.cols()) +
                         " columns, expected " + std::to_string(input_width()));
  }
}

Tensor2 Mlp::predict(const Tensor2& x) const {
  check_input(x);
  Tensor2 h = x;
  for (const DenseLayer& layer : layers_) {
    h = apply_activation(layer.activation, affine(h, layer));
  }
  return h;
}

MlpForward Mlp::forward(const Tensor2& x) const {
  check_input(x);
  MlpForward result;
  result.cache.inputs.reserve(layers_.size());
  result.cache.pre_activations.reserve(layers_.size());
  Tensor2 h = x;
  for (const DenseLayer& layer : layers_) {
    Tensor2 z = affine(h, layer);
    Tensor2 next = apply_activation(layer.activation, z);
    result.cache.inputs.push_back(std::move(h));
    result.cache.pre_activations.push_back(std::move(z));
    h = std::move(next);
  }
  result.output = std::move(h);
  return result;
}

Tensor2 Mlp::backward(const MlpCache& cache, const Tensor2& d_out) {
  if (cache.empty() || cache.inputs.size() != layers_.size()) {
    throw StateError("Mlp::backward: no forward cache for this network");
  }
  const std::size_t n = cache.inputs.front().rows();
  if (d_out.rows() != n || d_out.cols() != output_width()) {
    throw DimensionError("Mlp::backward: d_out shape does not match output");
  }
  Tensor2 grad = d_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    DenseLayer& layer = layers_[l];
    const Tensor2& z = cache.pre_activations[l];
    if (layer.activation != Activation::kIdentity) {
      auto g = grad.values();
      auto zv = z.values();
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] *= activate_derivative(layer.activation, zv[i]);
      }
    }
    Tensor2 gw = matmul_tn(cache.inputs[l], grad);
    auto dst = layer.grad_weight.values();
    auto src = gw.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    for (std::size_t r = 0; r < grad.rows(); ++r) {
      auto row = grad.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) layer.grad_bias[c] += row[c];
    }
    grad = matmul_nt(grad, layer.weight);
  }
  return grad;
}

void Mlp::zero_grad() {
  for (DenseLayer& layer : layers_) {
    layer.grad_weight.fill(0.0);
    std::fill(layer.grad_bias.begin(), layer.grad_bias.end(), 0.0);
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<std::span<double>> Mlp::parameters() {
  std::vector<std::span<double>> out;
  for (DenseLayer& layer : layers_) {
    out.emplace_back(layer.weight.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> Mlp::parameters() const {
  std::vector<std::span<const double>> out;
  for (const DenseLayer& layer : layers_) {
    out.emplace_back(layer.weight.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<double>> Mlp::gradients() {
  std::vector<std::span<double>> out;
  for (DenseLayer& layer : layers_) {
    out.emplace_back(layer.grad_weight.values());
    out.emplace_back(layer.grad_bias);
  }
  return out;
}

std::vector<std::span<const double>> Mlp::gradients() const {
  std::vector<std::span<const double>> out;
  for (const DenseLayer& layer : layers_) {
    out.emplace_back(layer.grad_weight.values());
    out.emplace_back(layer.grad_bias);
  }
  return out;
}

bool Mlp::operator==(const Mlp& other) const {
  if (!(spec_ == other.spec_)) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!(layers_[l].weight == other.layers_[l].weight)) return false;
    if (layers_[l].bias != other.layers_[l].bias) return false;
  }
  return true;
}

AdamState::AdamState(const Mlp& net, double lr) : learning_rate(lr) {
  for (auto p : net.parameters()) {
    first_.emplace_back(p.size(), 0.0);
    second_.emplace_back(p.size(), 0.0);
  }
}

void adam_step(Mlp& net, AdamState& state) {
  auto params = net.parameters();
  auto grads = net.gradients();
  if (state.first_.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state does not match network");
  }
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.first_[p];
    auto& v = state.second_[p];
    if (m.size() != params[p].size()) {
      throw DimensionError("adam_step: moment buffer shape mismatch");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = grads[p][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[p][i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
  net.zero_grad();
}

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h) {
  if (!(h > 0)) throw DomainError("finite_diff_grad: step must be positive");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point);
    point[i] = saved - h;
    const double down = f(point);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace mtdml
