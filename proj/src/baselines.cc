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

#include "mtdml/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mtdml/error.hpp"
#include "mtdml/losses.hpp"
#include "mtdml/model.hpp"

namespace mtdml {

std::string baseline_kind_name(BaselineKind k) { return k == BaselineKind::kS ? "S" : "T"; }

BaselineKind baseline_kind_from_name(const std::string& name) {
  if (name == "S" || name == "s") return BaselineKind::kS;
  if (name == "T" || name == "t") return BaselineKind::kT;
  throw ConfigError("unknown baseline kind '" + name + "'");
}

void BaselineConfig::validate() const {
  if (epochs == 0) throw ConfigError("baseline: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("baseline: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("baseline: learning_rate must be > 0");
}

namespace {

Tensor2 with_flag(const Tensor2& x, double flag) {
  Tensor2 out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c);
    out(r, x.cols()) = flag;
  }
  return out;
}

void fit_regressor(Mlp& net, const Tensor2& x, std::span<const double> y,
                   const BaselineConfig& cfg, std::uint64_t seed) {
  const std::size_t n = x.rows();
  net.layers().back().bias[0] =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  AdamState opt(net, cfg.learning_rate);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> yb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor2 xb = gather_rows(x, idx);
      yb.clear();
      for (std::size_t i : idx) yb.push_back(y[i]);
      MlpForward fwd = net.forward(xb);
      const LossWithGrad loss = squared_error(yb, fwd.output.values());
      if (!std::isfinite(loss.value)) {
        throw NumericError("baseline: non-finite loss at epoch " + std::to_string(epoch));
      }
      Tensor2 d_out(idx.size(), 1);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        d_out(i, 0) = loss.grad[i] / static_cast<double>(idx.size());
      }
      net.backward(fwd.cache, d_out);
      adam_step(net, opt);
    }
  }
}

}  // namespace

BaselineModel baseline_train(BaselineKind kind, const Tensor2& x,
                             std::span<const std::uint8_t> treated,
                             std::span<const double> y, const BaselineConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (treated.size() != n || y.size() != n) {
    throw DimensionError("baseline_train: row counts differ");
  }
  if (n == 0) throw DimensionError("baseline_train: empty data");
  BaselineModel m;
  m.kind = kind;
  m.scaler = scaler_fit(x);
  const Tensor2 xs = scaler_apply(m.scaler, x);
  std::mt19937_64 rng(cfg.seed);

  if (kind == BaselineKind::kS) {
    m.nets.emplace_back(tower_spec(x.cols() + 1, cfg.hidden_width, 1, cfg.hidden_activation,
                                   Activation::kIdentity),
                        rng);
    Tensor2 xf(n, x.cols() + 1);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) xf(r, c) = xs(r, c);
      xf(r, x.cols()) = treated[r] ? 1.0 : 0.0;
    }
    fit_regressor(m.nets[0], xf, y, cfg, cfg.seed + 1);
    return m;
  }

  for (int arm = 0; arm < 2; ++arm) {
    std::vector<std::size_t> rows;
    std::vector<double> ya;
    for (std::size_t i = 0; i < n; ++i) {
      if ((treated[i] != 0) == (arm == 1)) {
        rows.push_back(i);
        ya.push_back(y[i]);
      }
    }
    if (rows.empty()) {
      throw CapabilityError(std::string("baseline_train: T-learner ") +
                            (arm ? "treated" : "control") + " arm is empty");
    }
    m.nets.emplace_back(
        tower_spec(x.cols(), cfg.hidden_width, 1, cfg.hidden_activation, Activation::kIdentity),
        rng);
    fit_regressor(m.nets.back(), gather_rows(xs, rows), ya, cfg, cfg.seed + 2 + arm);
  }
  return m;
}

std::vector<double> baseline_predict(const BaselineModel& m, const Tensor2& x, bool flag) {
  const Tensor2 xs = scaler_apply(m.scaler, x);
  Tensor2 out;
  if (m.kind == BaselineKind::kS) {
    out = m.nets.at(0).predict(with_flag(xs, flag ? 1.0 : 0.0));
  } else {
    out = m.nets.at(flag ? 1 : 0).predict(xs);
  }
  return {out.values().begin(), out.values().end()};
}

std::vector<double> baseline_tau(const BaselineModel& m, const Tensor2& x) {
  std::vector<double> hi = baseline_predict(m, x, true);
  const std::vector<double> lo = baseline_predict(m, x, false);
  for (std::size_t i = 0; i < hi.size(); ++i) hi[i] -= lo[i];
  return hi;
}

}  // namespace mtdml
