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

#ifndef MTDML_BASELINES_HPP_
#define MTDML_BASELINES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mtdml/mlp.hpp"
#include "mtdml/tensor.hpp"
#include "mtdml/training.hpp"

namespace mtdml {

// Meta-learner reference estimators on a binary treatment.
enum class BaselineKind { kS, kT };

std::string baseline_kind_name(BaselineKind k);
BaselineKind baseline_kind_from_name(const std::string& name);

struct BaselineConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::size_t hidden_width = 32;
  Activation hidden_activation = Activation::kRelu;
  std::uint64_t seed = 11;

  void validate() const;
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::kS;
  // S: one net on [x, flag]. T: {control net, treated net} on x.
  std::vector<Mlp> nets;
  Scaler scaler;
};

// Squared-error regressors trained with Adam. Throws CapabilityError for a
// T-learner with an empty arm.
BaselineModel baseline_train(BaselineKind kind, const Tensor2& x,
                             std::span<const std::uint8_t> treated,
                             std::span<const double> y, const BaselineConfig& cfg);

// Predicted outcome with every sample set to arm `flag`.
std::vector<double> baseline_predict(const BaselineModel& m, const Tensor2& x, bool flag);

// f(x, 1) - f(x, 0) for S, f_1(x) - f_0(x) for T.
std::vector<double> baseline_tau(const BaselineModel& m, const Tensor2& x);

}  // namespace mtdml

#endif  // MTDML_BASELINES_HPP_
