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

#ifndef MTDML_LOSSES_HPP_
#define MTDML_LOSSES_HPP_

#include <span>
#include <vector>

#include "mtdml/tensor.hpp"

namespace mtdml {

// Weights of the composite objective and the Tweedie power.
struct LossWeights {
  double lambda_rlo = 0.1;
  double lambda_k = 1e-4;
  double rho = 1.9;

  // Throws ConfigError unless 1 < rho < 2 and both lambdas are >= 0.
  void validate() const;
};

// Scalar loss value together with the derivative of each per-sample term.
// The gradient of the mean loss w.r.t. prediction i is grad[i] / N.
struct LossWithGrad {
  double value = 0.0;
  std::vector<double> grad;
};

// (1/N) sum_i sum_k (t_ik - t_hat_ik)^2.
double treatment_loss(const Tensor2& t, const Tensor2& t_hat);
// d(treatment_loss)/d(t_hat).
Tensor2 treatment_loss_grad(const Tensor2& t, const Tensor2& t_hat);

// Negative Tweedie log-likelihood kernel,
//   (1/N) sum_i [ -y_i * yh_i^(1-rho)/(1-rho) + yh_i^(2-rho)/(2-rho) ],
// minimized at y_hat == y. Per-sample derivative: -y * yh^-rho + yh^(1-rho).
// Throws DomainError for y_hat <= 0 or y < 0, ConfigError for rho outside (1,2).
LossWithGrad tweedie_nll(std::span<const double> y, std::span<const double> y_hat,
                         double rho);

// (1/N) sum_i (y_i - y_hat_i)^2; per-sample derivative -2 (y - y_hat).
LossWithGrad squared_error(std::span<const double> y, std::span<const double> y_hat);

// u.v / (|u| |v|). Throws DegenerateError on a zero-norm input.
double cosine(std::span<const double> u, std::span<const double> v);

struct RloGrad {
  double value = 0.0;
  std::vector<double> d_i;
  std::vector<double> d_c;
  std::vector<double> d_a;
};

// cos(w_i, w_c) + cos(w_c, w_a) + cos(w_a, w_i).
double rlo_penalty(std::span<const double> w_i, std::span<const double> w_c,
                   std::span<const double> w_a);
RloGrad rlo_penalty_grad(std::span<const double> w_i, std::span<const double> w_c,
                         std::span<const double> w_a);

// (1/N) sum_i |kappa_i|^2.
double k_reg(const Tensor2& kappa);

struct LossComponents {
  double treatment = 0.0;
  double outcome = 0.0;
  double final_outcome = 0.0;
  double rlo = 0.0;
  double kreg = 0.0;
};

// treatment + outcome + final + lambda_rlo * rlo + lambda_k * kreg.
// Throws NumericError naming the first non-finite component.
double total_loss(const LossComponents& c, const LossWeights& w);

}  // namespace mtdml

#endif  // MTDML_LOSSES_HPP_
