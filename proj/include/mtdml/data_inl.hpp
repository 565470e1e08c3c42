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

#ifndef MTDML_DATA_INL_HPP_
#define MTDML_DATA_INL_HPP_

#include <cmath>
#include <random>

namespace mtdml {

template <typename Rng>
double sample_tweedie(double mu, double rho, double phi, Rng& rng) {
  const double lambda = tweedie_poisson_rate(mu, rho, phi);
  const double shape = (2.0 - rho) / (rho - 1.0);
  const double scale = phi * (rho - 1.0) * std::pow(mu, rho - 1.0);
  std::poisson_distribution<long> count_dist(lambda);
  const long count = count_dist(rng);
  std::gamma_distribution<double> gamma(shape, scale);
  double y = 0.0;
  for (long i = 0; i < count; ++i) y += gamma(rng);
  return y;
}

}  // namespace mtdml

#endif  // MTDML_DATA_INL_HPP_
