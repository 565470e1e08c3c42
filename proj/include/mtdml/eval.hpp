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

#ifndef MTDML_EVAL_HPP_
#define MTDML_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mtdml/data.hpp"
#include "mtdml/training.hpp"

namespace mtdml {

// Metrics are absent when the inputs lack what they need (ground truth, a
// second treatment arm).
struct MetricsReport {
  std::optional<double> pehe;
  std::optional<double> eps_ate;
  std::optional<double> eps_att;
  std::optional<double> policy_risk;
  std::optional<double> qini_auuc;
  std::optional<double> pcoc;
  std::size_t n_evaluated = 0;
};

struct BinarizeRecord {
  std::size_t dim = 0;
  double threshold = 0.0;
  double contrast = 1.0;
  std::vector<double> t_base;
};

// Binary-treatment view of a continuous-treatment dataset.
struct BinaryEvalView {
  std::vector<double> score;
  std::vector<std::uint8_t> treated;
  std::vector<double> y;
  BinarizeRecord record;

  std::size_t size() const { return y.size(); }
  std::size_t num_treated() const;
};

// sqrt(mean((tau_hat - tau)^2)).
double pehe(std::span<const double> tau_hat, std::span<const double> tau_true);
// |mean(tau_hat) - mean(tau)|.
double eps_ate(std::span<const double> tau_hat, std::span<const double> tau_true);
// eps_ate restricted to treated samples. Throws CapabilityError if none are.
double eps_att(std::span<const double> tau_hat, std::span<const double> tau_true,
               std::span<const std::uint8_t> treated);

// 1 - mean(pi * mu1 + (1 - pi) * mu0) / y_scale, y_scale = max over both
// arms. Lower is better; the oracle policy attains the minimum.
double policy_risk(std::span<const std::uint8_t> policy, std::span<const double> mu1,
                   std::span<const double> mu0);

// Unnormalized Qini coefficient. Samples are ranked by descending score
// (ties: ascending index); with cumulative treated/control outcome sums
// Y_T, Y_C and counts N_T, N_C over the top p samples,
//   Q(p) = Y_T - Y_C * N_T / N_C   (Q = Y_T while N_C = 0).
// Result: (trapezoid area of Q over p = 0..N minus N * Q(N) / 2) / N.
// Throws CapabilityError unless both arms are non-empty.
double qini_auuc(const BinaryEvalView& view);

struct CurvePoint {
  double fraction = 0.0;
  double qini = 0.0;
};
// The N + 1 points (p / N, Q(p)) of the same construction.
std::vector<CurvePoint> uplift_curve(const BinaryEvalView& view);

// mean(y_hat) / mean(y). Throws DomainError when mean(y) is zero.
double pcoc(std::span<const double> y_hat, std::span<const double> y);

// Treated flag t_dim > threshold; scores supplied by the caller.
BinaryEvalView make_binary_view(const Dataset& d, std::size_t dim, double threshold,
                                std::vector<double> scores);

// Scores are the ensemble's uplift from t_base to t_base + contrast * e_dim.
// An empty t_base means the column means of d.t. An empty arm is allowed
// here; metrics that need both arms reject the view.
BinaryEvalView binarize(const Dataset& d, std::size_t dim, double threshold,
                        const CrossFitEnsemble& e, double contrast,
                        std::vector<double> t_base = {});

double median(std::vector<double> v);
std::vector<double> column_means(const Tensor2& t);

struct EvalSettings {
  std::size_t dim = 0;
  // Median of t_dim when absent.
  std::optional<double> threshold;
  double contrast = 1.0;
  // Column means of t when empty.
  std::vector<double> t_base;
};

struct Evaluation {
  MetricsReport report;
  std::vector<CurvePoint> curve;
  BinaryEvalView view;
};

// Full metric suite of an ensemble on a dataset. Ground-truth metrics are
// populated only when d carries truth.
Evaluation evaluate(const CrossFitEnsemble& e, const Dataset& d, const EvalSettings& s);

}  // namespace mtdml

#endif  // MTDML_EVAL_HPP_
