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

#ifndef MTDML_DATA_HPP_
#define MTDML_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtdml/tensor.hpp"

namespace mtdml {

enum class EffectKind { kConstant, kLinear, kGrouped };

std::string effect_kind_name(EffectKind k);
EffectKind effect_kind_from_name(const std::string& name);

// Lower clamp of the true outcome mean.
inline constexpr double kMinTrueMean = 0.01;

// Parameters of the synthetic confounded data-generating process.
//
// Covariates are laid out as [I | C | A] index blocks. Treatments load on
// I and C, the outcome on C and A, so C confounds. The outcome is drawn from
// an exact Tweedie law (compound Poisson-Gamma), giving a point mass at zero
// and a long right tail.
struct DgpConfig {
  std::size_t n = 20000;
  std::size_t d_i = 2;
  std::size_t d_c = 3;
  std::size_t d_a = 2;
  std::size_t k_t = 2;
  // Confounding strength: scale of the covariate part of each treatment.
  double gamma = 1.0;
  EffectKind effect = EffectKind::kConstant;
  double effect_constant = 0.5;
  double slope_hi = 1.0;
  double slope_lo = 0.2;
  double rho = 1.5;
  double phi = 2.0;
  double sigma_t = 1.0;
  // Offset added to every treatment so that observed treatments stay in
  // the region where the true dose response is linear.
  double t_shift = 5.0;
  std::uint64_t seed = 42;

  std::size_t num_covariates() const { return d_i + d_c + d_a; }
  // Throws ConfigError on invalid values.
  void validate() const;
};

struct RoleSplit {
  std::size_t d_i = 0;
  std::size_t d_c = 0;
  std::size_t d_a = 0;
};

// Known effect structure of a synthetic sample.
struct GroundTruth {
  Tensor2 kappa;            // N x K_t, >= 0
  std::vector<double> mu0;  // > 0
};

struct Dataset {
  Tensor2 x;
  Tensor2 t;
  std::vector<double> y;
  std::optional<GroundTruth> truth;
  std::optional<RoleSplit> roles;

  std::size_t size() const { return y.size(); }
  std::size_t num_covariates() const { return x.cols(); }
  std::size_t num_treatments() const { return t.cols(); }

  // Throws DimensionError on inconsistent row counts and DomainError on a
  // negative outcome or negative true kappa.
  void validate() const;
};

// Sample subset by row index.
Dataset subset(const Dataset& d, std::span<const std::size_t> rows);

// Draws a dataset with ground truth. Each sample uses its own generator seeded
// from (seed, index), so output does not depend on `threads`.
Dataset generate_synthetic(const DgpConfig& cfg, unsigned threads = 1);

// Draw from the Tweedie law with mean mu, power rho and dispersion phi:
// N ~ Poisson(mu^(2-rho) / (phi (2-rho))), y = sum of N Gamma draws with
// shape (2-rho)/(rho-1) and scale phi (rho-1) mu^(rho-1).
template <typename Rng>
double sample_tweedie(double mu, double rho, double phi, Rng& rng);

// Poisson rate of the compound Poisson-Gamma representation.
double tweedie_poisson_rate(double mu, double rho, double phi);

// max(mu0_i + sum_k kappa_ik * max(t_k, 0), kMinTrueMean).
double true_mean(const GroundTruth& truth, std::size_t i, std::span<const double> t);

struct ContrastTruth {
  std::vector<double> tau;
  double ate = 0.0;
};

// tau_i = sum_k kappa_ik * (max(t_to,0) - max(t_from,0))_k. Throws
// CapabilityError when the dataset carries no ground truth.
ContrastTruth true_contrast(const Dataset& d, std::span<const double> t_from,
                            std::span<const double> t_to);

// CSV with header x_0..x_{D-1}, t_0..t_{K-1}, y and optionally
// kappa_true_0..kappa_true_{K-1}, mu0_true. Throws IoError / ParseError.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& d, const std::string& path);

struct OutcomeSummary {
  double mean = 0.0;
  double zero_fraction = 0.0;
  double skewness = 0.0;
};
OutcomeSummary summarize_outcome(std::span<const double> y);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace mtdml

#include "mtdml/data_inl.hpp"

#endif  // MTDML_DATA_HPP_
