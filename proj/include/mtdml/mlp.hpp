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

#ifndef MTDML_MLP_HPP_
#define MTDML_MLP_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mtdml/tensor.hpp"

namespace mtdml {

enum class Activation { kRelu, kTanh, kIdentity, kSoftplus };

std::string activation_name(Activation a);
// Throws ConfigError on unknown names.
Activation activation_from_name(const std::string& name);

// Overflow-safe softplus: log1p(exp(-|z|)) + max(z, 0).
double softplus(double z);
double sigmoid(double z);

// layer_widths = {input, hidden..., output}; one activation per weight layer.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  std::vector<Activation> activations;

  // Throws ConfigError unless there is at least one layer, every width is
  // positive and the activation count matches.
  void validate() const;
  std::size_t num_layers() const { return activations.size(); }

  bool operator==(const MlpSpec&) const = default;
};

// Fully connected layer: out = act(in * weight + bias), weight is in x out.
struct DenseLayer {
  Tensor2 weight;
  std::vector<double> bias;
  Tensor2 grad_weight;
  std::vector<double> grad_bias;
  Activation activation = Activation::kIdentity;
};

// Per-layer inputs and pre-activations retained by a forward pass.
struct MlpCache {
  std::vector<Tensor2> inputs;
  std::vector<Tensor2> pre_activations;

  bool empty() const { return inputs.empty(); }
};

struct MlpForward {
  Tensor2 output;
  MlpCache cache;
};

class Mlp {
 public:
  Mlp() = default;
  // Weights uniform(-sqrt(6/(fan_in+fan_out)), +...), biases zero.
  Mlp(MlpSpec spec, std::mt19937_64& rng);
  // All parameters zero.
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  std::size_t input_width() const { return spec_.layer_widths.front(); }
  std::size_t output_width() const { return spec_.layer_widths.back(); }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Inference only; no cache retained.
  Tensor2 predict(const Tensor2& x) const;
  MlpForward forward(const Tensor2& x) const;

  // Accumulates parameter gradients for d(loss)/d(output) = d_out and returns
  // d(loss)/d(input). Throws StateError on an empty cache.
  Tensor2 backward(const MlpCache& cache, const Tensor2& d_out);

  void zero_grad();

  std::size_t parameter_count() const;
  // Parameter and gradient buffers in a fixed order: for each layer, weight
  // then bias.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::vector<std::span<double>> gradients();
  std::vector<std::span<const double>> gradients() const;

  bool operator==(const Mlp& other) const;

 private:
  void check_input(const Tensor2& x) const;

  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

// Bias-corrected Adam moments for one network.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Mlp& net, double learning_rate);

  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  std::uint64_t step() const { return step_; }

 private:
  friend void adam_step(Mlp& net, AdamState& state);
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

// Applies one Adam update from the accumulated gradients, then zeroes them.
void adam_step(Mlp& net, AdamState& state);

// Central-difference gradient of f at theta. Throws DomainError for h <= 0
// and NumericError if f returns a non-finite value.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> theta, double h);

}  // namespace mtdml

#endif  // MTDML_MLP_HPP_
