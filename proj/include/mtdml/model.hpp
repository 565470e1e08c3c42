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

#ifndef MTDML_MODEL_HPP_
#define MTDML_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtdml/losses.hpp"
#include "mtdml/mlp.hpp"
#include "mtdml/tensor.hpp"

namespace mtdml {

// Exponent cap of the outcome head's log link.
inline constexpr double kMaxLogOutcome = 30.0;

struct ModelSpec {
  std::size_t input_dim = 0;
  std::size_t treatment_dim = 0;
  std::size_t shared_width = 64;
  std::size_t rep_dim = 16;
  // Hidden width of the treatment, outcome and sensitivity towers; 0 makes
  // them single linear layers.
  std::size_t tower_width = 32;
  Activation hidden_activation = Activation::kRelu;
  // false: one factor head feeds every downstream tower (no I/C/A split).
  bool disentangle = true;
  // Monotone direction per treatment dimension, each +1 or -1. Empty means
  // all +1.
  std::vector<int> signs;
  double y_floor = 1e-6;

  // Throws ConfigError on invalid values. Fills default signs.
  void validate();
};

enum class Stage { kPropensity, kCausal, kJoint };
enum class OutcomeLoss { kTweedie, kSquaredError };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

// Shared bottom, three factor heads and the three prediction towers.
//
//   x -> bottom -> head_i -> I
//               -> head_c -> C
//               -> head_a -> A
//   [I, C]    -> f_t -> t_hat
//   [C, A]    -> f_y -> exp(.) -> y_base
//   [I, C, A] -> f_k (softplus output) -> kappa >= 0
//   y_final = max(y_base + sum_k sign_k * kappa_k * (t_k - t_hat_k), y_floor)
//
// With disentangle == false only head_c is used and I = C = A.
class MtdmlModel {
 public:
  MtdmlModel() = default;
  MtdmlModel(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }

  Mlp& bottom() { return bottom_; }
  Mlp& head_i() { return head_i_; }
  Mlp& head_c() { return head_c_; }
  Mlp& head_a() { return head_a_; }
  Mlp& f_t() { return f_t_; }
  Mlp& f_y() { return f_y_; }
  Mlp& f_k() { return f_k_; }
  const Mlp& bottom() const { return bottom_; }
  const Mlp& head_i() const { return head_i_; }
  const Mlp& head_c() const { return head_c_; }
  const Mlp& head_a() const { return head_a_; }
  const Mlp& f_t() const { return f_t_; }
  const Mlp& f_y() const { return f_y_; }
  const Mlp& f_k() const { return f_k_; }

  // Networks whose parameters a stage updates. The causal stage trains f_k
  // only; the propensity stage everything else that is in use.
  std::vector<Mlp*> trainable(Stage stage);
  // Every network, in serialization order.
  std::vector<Mlp*> networks();
  std::vector<const Mlp*> networks() const;

  bool operator==(const MtdmlModel& other) const;

 private:
  ModelSpec spec_;
  Mlp bottom_, head_i_, head_c_, head_a_, f_t_, f_y_, f_k_;
};

// Builds an MlpSpec for a tower: in -> [hidden] -> out.
MlpSpec tower_spec(std::size_t in, std::size_t hidden, std::size_t out,
                   Activation hidden_act, Activation out_act);

struct Representations {
  Tensor2 rep_i;
  Tensor2 rep_c;
  Tensor2 rep_a;
};

struct OutcomePrediction {
  std::vector<double> y_base;
  // Samples whose log-outcome was capped at kMaxLogOutcome.
  std::size_t clamped = 0;
};

struct ForwardOutput {
  Representations reps;
  Tensor2 t_hat;
  std::vector<double> y_base;
  Tensor2 kappa;
  Tensor2 delta_t;
  std::vector<double> y_final;
  std::size_t clamped = 0;
};

Representations disentangle(const MtdmlModel& m, const Tensor2& x);
Tensor2 predict_treatment(const MtdmlModel& m, const Tensor2& rep_i, const Tensor2& rep_c);
OutcomePrediction predict_outcome(const MtdmlModel& m, const Tensor2& rep_c,
                                  const Tensor2& rep_a);
Tensor2 predict_sensitivity(const MtdmlModel& m, const Tensor2& rep_i, const Tensor2& rep_c,
                            const Tensor2& rep_a);

// y_final_i = max(y_base_i + sum_k signs_k * kappa_ik * delta_t_ik, y_floor).
std::vector<double> monotonic_head(const Tensor2& kappa, const Tensor2& delta_t,
                                   std::span<const int> signs,
                                   std::span<const double> y_base, double y_floor);

ForwardOutput forward(const MtdmlModel& m, const Tensor2& x, const Tensor2& t);

// Counterfactual contrast sum_k sign_k * kappa_k(x) * (t_to - t_from)_k per
// sample. Does not depend on any observed treatment.
std::vector<double> uplift(const MtdmlModel& m, const Tensor2& x,
                           std::span<const double> t_from, std::span<const double> t_to);

// Row-wise mean of a head's first weight matrix: one entry per input unit of
// the head, i.e. a vector in shared-representation space.
std::vector<double> mean_head_weight(const Mlp& head);
// RLO penalty over the three factor heads of m.
double model_rlo(const MtdmlModel& m);

struct StageLoss {
  LossComponents components;
  double total = 0.0;
  // false when the model does not disentangle; the RLO term is then absent.
  bool has_rlo = false;
};

// Evaluates the stage objective on a batch and accumulates its gradients
// into the trainable networks (all gradients are zeroed first).
//   propensity: L_treatment + L_outcome + lambda_rlo * L_rlo
//   causal:     L_final + lambda_k * L_kreg   (other networks frozen)
//   joint:      the sum of both.
// Throws NumericError naming the offending term on a non-finite loss.
StageLoss model_loss_and_grads(MtdmlModel& m, const Tensor2& x, const Tensor2& t,
                               std::span<const double> y, const LossWeights& w,
                               Stage stage, OutcomeLoss outcome_loss);

}  // namespace mtdml

#endif  // MTDML_MODEL_HPP_
