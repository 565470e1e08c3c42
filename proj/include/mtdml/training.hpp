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

#ifndef MTDML_TRAINING_HPP_
#define MTDML_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mtdml/data.hpp"
#include "mtdml/losses.hpp"
#include "mtdml/model.hpp"
#include "mtdml/tensor.hpp"

namespace mtdml {

// Per-covariate standardization.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Population mean and standard deviation of each column. Throws
// DegenerateError naming the column if its variance is zero, or if N < 2.
Scaler scaler_fit(const Tensor2& x);
Tensor2 scaler_apply(const Scaler& s, const Tensor2& x);

enum class TrainMode {
  // Propensity stage on one fold, causal stage on the other, then swap.
  kCrossFit,
  // Full composite objective on each fold, one model per fold.
  kJoint,
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 7;
  LossWeights loss;
  std::size_t folds = 2;
  TrainMode mode = TrainMode::kCrossFit;
  bool use_ica_disentangle = true;
  bool use_tweedie = true;
  // Epochs without training-loss improvement before stopping; 0 disables.
  std::size_t patience = 20;
  // Architecture; input/treatment dims and `disentangle` are filled from the
  // data and the ablation flags.
  ModelSpec architecture;
  // The two cross-fit rounds run concurrently when >= 2.
  unsigned threads = 1;

  void validate() const;
  OutcomeLoss outcome_loss() const {
    return use_tweedie ? OutcomeLoss::kTweedie : OutcomeLoss::kSquaredError;
  }
};

struct StageReport {
  Stage stage = Stage::kPropensity;
  // Sample-weighted mean stage loss per epoch.
  std::vector<double> trace;
  // Mean components over the last epoch.
  LossComponents final_components;
  bool has_rlo = false;
};

// Sets the output biases of f_t and f_y to the fold's mean treatment and
// log mean outcome.
void warm_start_biases(MtdmlModel& m, const Tensor2& t, std::span<const double> y);

// Zeroes the output weights of f_k and sets its biases so that kappa starts at
// the signed least-squares slope of (y - y_base) on delta_t, floored at 0.01.
// Leaves f_k untouched when the normal equations are singular.
void warm_start_sensitivity(MtdmlModel& m, const Tensor2& x_scaled, const Tensor2& t,
                            std::span<const double> y);

// Adam over shuffled mini-batches of the stage objective; only the stage's
// trainable networks move. Deterministic given `seed`. Throws NumericError
// with epoch/batch context on a non-finite loss.
StageReport train_stage(MtdmlModel& m, const Tensor2& x_scaled, const Tensor2& t,
                        std::span<const double> y, Stage stage, const TrainConfig& cfg,
                        std::uint64_t seed);

struct RoundReport {
  std::vector<StageReport> stages;
};

struct CrossFitEnsemble {
  Scaler scaler;
  MtdmlModel model_a;
  MtdmlModel model_b;
  // 0 = fold A, 1 = fold B, per training sample.
  std::vector<std::uint8_t> fold;
  std::uint64_t fold_seed = 0;
  RoundReport round_a;
  RoundReport round_b;
};

// Seeded split into halves; |A| = ceil(N/2).
std::vector<std::uint8_t> assign_folds(std::size_t n, std::uint64_t seed);

// Two-fold cross-fitting. Round a: propensity stage on A, causal stage on B
// using the A-trained propensity networks for the residuals; round b mirrors
// it. Requires N >= 2 * batch_size.
CrossFitEnsemble crossfit_train(const Dataset& data, const TrainConfig& cfg);

struct EnsemblePrediction {
  std::vector<double> y_final;
  Tensor2 kappa;
  Tensor2 t_hat;
  std::vector<double> y_base;
};

// Mean of the two models' outputs on scaled x.
EnsemblePrediction ensemble_predict(const CrossFitEnsemble& e, const Tensor2& x,
                                    const Tensor2& t);
std::vector<double> ensemble_uplift(const CrossFitEnsemble& e, const Tensor2& x,
                                    std::span<const double> t_from,
                                    std::span<const double> t_to);

}  // namespace mtdml

#endif  // MTDML_TRAINING_HPP_
