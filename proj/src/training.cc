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

#include "mtdml/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "mtdml/error.hpp"

namespace mtdml {

Scaler scaler_fit(const Tensor2& x) {
  if (x.rows() < 2) throw DegenerateError("scaler_fit: need at least two samples");
  Scaler s;
  s.mean.assign(x.cols(), 0.0);
  s.stddev.assign(x.cols(), 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - s.mean[c];
      s.stddev[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    s.stddev[c] = std::sqrt(s.stddev[c] / n);
    if (!(s.stddev[c] > 1e-12 * (1.0 + std::abs(s.mean[c])))) {
      throw DegenerateError("scaler_fit: column x_" + std::to_string(c) +
                            " has zero variance");
    }
  }
  return s;
}

Tensor2 scaler_apply(const Scaler& s, const Tensor2& x) {
  if (x.cols() != s.mean.size()) {
    throw DimensionError("scaler_apply: x has " + std::to_string(x.cols()) +
                         " columns, scaler has " + std::to_string(s.mean.size()));
  }
  Tensor2 out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = (x(r, c) - s.mean[c]) / s.stddev[c];
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (folds != 2) throw ConfigError("train: only two-fold cross-fitting is supported");
  loss.validate();
}

void warm_start_biases(MtdmlModel& m, const Tensor2& t, std::span<const double> y) {
  if (y.empty()) return;
  auto& t_bias = m.f_t().layers().back().bias;
  for (std::size_t k = 0; k < t.cols(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) s += t(i, k);
    t_bias[k] = s / static_cast<double>(t.rows());
  }
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  m.f_y().layers().back().bias[0] = std::log(std::max(mean_y, 1e-3));
}

void warm_start_sensitivity(MtdmlModel& m, const Tensor2& x_scaled, const Tensor2& t,
                            std::span<const double> y) {
  const std::size_t k = t.cols();
  if (y.size() <= k + 1) return;
  const ForwardOutput f = forward(m, x_scaled, t);
  // Normal equations of (y - y_base) on [1, delta_t], solved in place.
  const std::size_t p = k + 1;
  std::vector<double> a(p * (p + 1), 0.0);
  std::vector<double> v(p);
  for (std::size_t i = 0; i < y.size(); ++i) {
    v[0] = 1.0;
    for (std::size_t j = 0; j < k; ++j) v[j + 1] = f.delta_t(i, j);
    const double r = y[i] - f.y_base[i];
    for (std::size_t row = 0; row < p; ++row) {
      for (std::size_t col = 0; col < p; ++col) a[row * (p + 1) + col] += v[row] * v[col];
      a[row * (p + 1) + p] += v[row] * r;
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    const double pivot = a[c * (p + 1) + c];
    if (!(std::abs(pivot) > 1e-12)) return;
    for (std::size_t row = c + 1; row < p; ++row) {
      const double q = a[row * (p + 1) + c] / pivot;
      for (std::size_t col = c; col <= p; ++col) a[row * (p + 1) + col] -= q * a[c * (p + 1) + col];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t row = p; row-- > 0;) {
    double s = a[row * (p + 1) + p];
    for (std::size_t col = row + 1; col < p; ++col) s -= a[row * (p + 1) + col] * beta[col];
    beta[row] = s / a[row * (p + 1) + row];
  }
  const std::vector<int>& signs = m.spec().signs;
  DenseLayer& out = m.f_k().layers().back();
  std::fill(out.weight.values().begin(), out.weight.values().end(), 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double sign = signs.empty() ? 1.0 : signs[j];
    const double target = std::clamp(sign * beta[j + 1], 1e-2, 1e3);
    // Inverse softplus.
    out.bias[j] = target + std::log(-std::expm1(-target));
  }
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void add_scaled(LossComponents& acc, const LossComponents& c, double w) {
  acc.treatment += w * c.treatment;
  acc.outcome += w * c.outcome;
  acc.final_outcome += w * c.final_outcome;
  acc.rlo += w * c.rlo;
  acc.kreg += w * c.kreg;
}

}  // namespace

StageReport train_stage(MtdmlModel& m, const Tensor2& x_scaled, const Tensor2& t,
                        std::span<const double> y, Stage stage, const TrainConfig& cfg,
                        std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = x_scaled.rows();
  if (n == 0) throw DimensionError("train_stage: empty training data");
  if (t.rows() != n || y.size() != n) throw DimensionError("train_stage: row counts differ");

  std::vector<Mlp*> nets = m.trainable(stage);
  std::vector<AdamState> opt;
  opt.reserve(nets.size());
  for (Mlp* net : nets) opt.emplace_back(*net, cfg.learning_rate);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  StageReport report;
  report.stage = stage;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<double> yb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    LossComponents epoch_parts;
    for (std::size_t start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      const Tensor2 xb = gather_rows(x_scaled, idx);
      const Tensor2 tb = gather_rows(t, idx);
      yb.clear();
      for (std::size_t i : idx) yb.push_back(y[i]);
      StageLoss loss;
      try {
        loss = model_loss_and_grads(m, xb, tb, yb, cfg.loss, stage, cfg.outcome_loss());
      } catch (const NumericError& e) {
        throw NumericError(stage_name(stage) + " stage, epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch) + ": " + e.what());
      }
      for (std::size_t j = 0; j < nets.size(); ++j) adam_step(*nets[j], opt[j]);
      const double w = static_cast<double>(idx.size()) / static_cast<double>(n);
      epoch_loss += w * loss.total;
      add_scaled(epoch_parts, loss.components, w);
      report.has_rlo = loss.has_rlo;
    }
    report.trace.push_back(epoch_loss);
    report.final_components = epoch_parts;
    if (epoch_loss < best) {
      best = epoch_loss;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  return report;
}

std::vector<std::uint8_t> assign_folds(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0xF01D));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::uint8_t> fold(n, 1);
  const std::size_t size_a = (n + 1) / 2;
  for (std::size_t i = 0; i < size_a; ++i) fold[perm[i]] = 0;
  return fold;
}

namespace {

struct FoldData {
  Tensor2 x;
  Tensor2 t;
  std::vector<double> y;
};

FoldData take_fold(const Tensor2& x_scaled, const Dataset& d,
                   const std::vector<std::uint8_t>& fold, std::uint8_t which) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if (fold[i] == which) rows.push_back(i);
  }
  FoldData f;
  f.x = gather_rows(x_scaled, rows);
  f.t = gather_rows(d.t, rows);
  for (std::size_t r : rows) f.y.push_back(d.y[r]);
  return f;
}

// One cross-fit round: nuisance fold trains the propensity networks, effect
// fold the sensitivity network. In joint mode the whole objective is fit on
// the nuisance fold.
void run_round(MtdmlModel& m, RoundReport& report, const FoldData& nuisance,
               const FoldData& effect, const TrainConfig& cfg, std::uint64_t seed) {
  warm_start_biases(m, nuisance.t, nuisance.y);
  if (cfg.mode == TrainMode::kJoint) {
    report.stages.push_back(train_stage(m, nuisance.x, nuisance.t, nuisance.y,
                                        Stage::kJoint, cfg, mix_seed(seed, 3)));
    return;
  }
  report.stages.push_back(train_stage(m, nuisance.x, nuisance.t, nuisance.y,
                                      Stage::kPropensity, cfg, mix_seed(seed, 1)));
  warm_start_sensitivity(m, effect.x, effect.t, effect.y);
  report.stages.push_back(train_stage(m, effect.x, effect.t, effect.y, Stage::kCausal, cfg,
                                      mix_seed(seed, 2)));
}

}  // namespace

CrossFitEnsemble crossfit_train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.size();
  if (n < 2 * cfg.batch_size) {
    throw ConfigError("crossfit_train: need at least 2 * batch_size = " +
                      std::to_string(2 * cfg.batch_size) + " samples, got " +
                      std::to_string(n));
  }
  ModelSpec spec = cfg.architecture;
  spec.input_dim = data.num_covariates();
  spec.treatment_dim = data.num_treatments();
  spec.disentangle = cfg.use_ica_disentangle;
  spec.validate();

  CrossFitEnsemble e;
  e.fold_seed = cfg.seed;
  e.fold = assign_folds(n, cfg.seed);
  e.scaler = scaler_fit(data.x);
  const Tensor2 x_scaled = scaler_apply(e.scaler, data.x);
  const FoldData fold_a = take_fold(x_scaled, data, e.fold, 0);
  const FoldData fold_b = take_fold(x_scaled, data, e.fold, 1);

  e.model_a = MtdmlModel(spec, mix_seed(cfg.seed, 10));
  e.model_b = MtdmlModel(spec, mix_seed(cfg.seed, 20));
  auto round_a = [&] { run_round(e.model_a, e.round_a, fold_a, fold_b, cfg, mix_seed(cfg.seed, 11)); };
  auto round_b = [&] { run_round(e.model_b, e.round_b, fold_b, fold_a, cfg, mix_seed(cfg.seed, 21)); };
  if (cfg.threads >= 2) {
    std::exception_ptr err_b;
    std::thread worker([&] {
      try {
        round_b();
      } catch (...) {
        err_b = std::current_exception();
      }
    });
    std::exception_ptr err_a;
    try {
      round_a();
    } catch (...) {
      err_a = std::current_exception();
    }
    worker.join();
    if (err_a) std::rethrow_exception(err_a);
    if (err_b) std::rethrow_exception(err_b);
  } else {
    round_a();
    round_b();
  }
  return e;
}

EnsemblePrediction ensemble_predict(const CrossFitEnsemble& e, const Tensor2& x,
                                    const Tensor2& t) {
  const Tensor2 xs = scaler_apply(e.scaler, x);
  const ForwardOutput a = forward(e.model_a, xs, t);
  const ForwardOutput b = forward(e.model_b, xs, t);
  auto avg = [](std::span<const double> p, std::span<const double> q) {
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = 0.5 * (p[i] + q[i]);
    return out;
  };
  EnsemblePrediction out;
  out.y_final = avg(a.y_final, b.y_final);
  out.y_base = avg(a.y_base, b.y_base);
  out.kappa = Tensor2(a.kappa.rows(), a.kappa.cols(), avg(a.kappa.values(), b.kappa.values()));
  out.t_hat = Tensor2(a.t_hat.rows(), a.t_hat.cols(), avg(a.t_hat.values(), b.t_hat.values()));
  return out;
}

std::vector<double> ensemble_uplift(const CrossFitEnsemble& e, const Tensor2& x,
                                    std::span<const double> t_from,
                                    std::span<const double> t_to) {
  const Tensor2 xs = scaler_apply(e.scaler, x);
  std::vector<double> a = uplift(e.model_a, xs, t_from, t_to);
  const std::vector<double> b = uplift(e.model_b, xs, t_from, t_to);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + b[i]);
  return a;
}

}  // namespace mtdml
