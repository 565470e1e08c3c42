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

#include "mtdml/losses.hpp"

#include <cmath>
#include <string>

#include "mtdml/error.hpp"

namespace mtdml {

void LossWeights::validate() const {
  if (!(rho > 1.0 && rho < 2.0)) {
    throw ConfigError("Tweedie power rho must lie in (1, 2), got " + std::to_string(rho));
  }
  if (!(lambda_rlo >= 0.0)) throw ConfigError("lambda_rlo must be >= 0");
  if (!(lambda_k >= 0.0)) throw ConfigError("lambda_k must be >= 0");
}

double treatment_loss(const Tensor2& t, const Tensor2& t_hat) {
  if (t.rows() != t_hat.rows() || t.cols() != t_hat.cols()) {
    throw DimensionError("treatment_loss: shape mismatch");
  }
  if (t.rows() == 0) return 0.0;
  double s = 0.0;
  auto a = t.values();
  auto b = t_hat.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(t.rows());
}

Tensor2 treatment_loss_grad(const Tensor2& t, const Tensor2& t_hat) {
  if (t.rows() != t_hat.rows() || t.cols() != t_hat.cols()) {
    throw DimensionError("treatment_loss_grad: shape mismatch");
  }
  Tensor2 g(t.rows(), t.cols());
  if (t.rows() == 0) return g;
  const double scale = -2.0 / static_cast<double>(t.rows());
  auto a = t.values();
  auto b = t_hat.values();
  auto out = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = scale * (a[i] - b[i]);
  return g;
}

LossWithGrad tweedie_nll(std::span<const double> y, std::span<const double> y_hat,
                         double rho) {
  if (!(rho > 1.0 && rho < 2.0)) {
    throw ConfigError("tweedie_nll: rho must lie in (1, 2), got " + std::to_string(rho));
  }
  if (y.size() != y_hat.size()) throw DimensionError("tweedie_nll: length mismatch");
  LossWithGrad out;
  out.grad.resize(y.size());
  if (y.empty()) return out;
  const double a = 1.0 - rho;
  const double b = 2.0 - rho;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yh = y_hat[i];
    if (!(yh > 0.0)) {
      throw DomainError("tweedie_nll: prediction must be > 0 at index " + std::to_string(i));
    }
    if (!(y[i] >= 0.0)) {
      throw DomainError("tweedie_nll: outcome must be >= 0 at index " + std::to_string(i));
    }
    const double p_a = std::pow(yh, a);  // yh^(1-rho)
    const double p_b = p_a * yh;         // yh^(2-rho)
    s += -y[i] * p_a / a + p_b / b;
    out.grad[i] = -y[i] * p_a / yh + p_a;
  }
  out.value = s / static_cast<double>(y.size());
  return out;
}

LossWithGrad squared_error(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw DimensionError("squared_error: length mismatch");
  LossWithGrad out;
  out.grad.resize(y.size());
  if (y.empty()) return out;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_hat[i];
    s += d * d;
    out.grad[i] = -2.0 * d;
  }
  out.value = s / static_cast<double>(y.size());
  return out;
}

namespace {

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double checked_norm(std::span<const double> u) {
  const double n = std::sqrt(dot(u, u));
  if (!(n > 0.0)) throw DegenerateError("cosine: zero-norm vector");
  return n;
}

// Adds d cos(u, v) / du, scaled by `scale`, into `out`.
void add_cosine_grad(std::span<const double> u, std::span<const double> v,
                     std::vector<double>& out) {
  const double nu = checked_norm(u);
  const double nv = checked_norm(v);
  const double c = dot(u, v) / (nu * nv);
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] += v[i] / (nu * nv) - c * u[i] / (nu * nu);
  }
}

void check_same_length(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c) {
  if (a.size() != b.size() || b.size() != c.size()) {
    throw DimensionError("rlo_penalty: weight vectors differ in length");
  }
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DimensionError("cosine: length mismatch");
  return dot(u, v) / (checked_norm(u) * checked_norm(v));
}

double rlo_penalty(std::span<const double> w_i, std::span<const double> w_c,
                   std::span<const double> w_a) {
  check_same_length(w_i, w_c, w_a);
  return cosine(w_i, w_c) + cosine(w_c, w_a) + cosine(w_a, w_i);
}

RloGrad rlo_penalty_grad(std::span<const double> w_i, std::span<const double> w_c,
                         std::span<const double> w_a) {
  check_same_length(w_i, w_c, w_a);
  RloGrad g;
  g.value = rlo_penalty(w_i, w_c, w_a);
  g.d_i.assign(w_i.size(), 0.0);
  g.d_c.assign(w_c.size(), 0.0);
  g.d_a.assign(w_a.size(), 0.0);
  add_cosine_grad(w_i, w_c, g.d_i);
  add_cosine_grad(w_i, w_a, g.d_i);
  add_cosine_grad(w_c, w_i, g.d_c);
  add_cosine_grad(w_c, w_a, g.d_c);
  add_cosine_grad(w_a, w_i, g.d_a);
  add_cosine_grad(w_a, w_c, g.d_a);
  return g;
}

double k_reg(const Tensor2& kappa) {
  if (kappa.rows() == 0) return 0.0;
  double s = 0.0;
  for (double v : kappa.values()) s += v * v;
  return s / static_cast<double>(kappa.rows());
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  const std::pair<const char*, double> parts[] = {
      {"treatment", c.treatment}, {"outcome", c.outcome},
      {"final", c.final_outcome}, {"rlo", c.rlo},
      {"k_reg", c.kreg}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("total_loss: non-finite ") + name + " term");
    }
  }
  return c.treatment + c.outcome + c.final_outcome + w.lambda_rlo * c.rlo +
         w.lambda_k * c.kreg;
}

}  // namespace mtdml
