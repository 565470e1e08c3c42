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

#include "mtdml/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mtdml/error.hpp"

namespace mtdml {

void ModelSpec::validate() {
  if (input_dim == 0) throw ConfigError("model: input_dim must be >= 1");
  if (treatment_dim == 0) throw ConfigError("model: treatment_dim must be >= 1");
  if (shared_width == 0) throw ConfigError("model: shared_width must be >= 1");
  if (rep_dim == 0) throw ConfigError("model: rep_dim must be >= 1");
  if (signs.empty()) signs.assign(treatment_dim, 1);
  if (signs.size() != treatment_dim) {
    throw ConfigError("model: " + std::to_string(signs.size()) + " signs for " +
                      std::to_string(treatment_dim) + " treatment dimensions");
  }
  for (int s : signs) {
    if (s != 1 && s != -1) throw ConfigError("model: signs must be +1 or -1");
  }
  if (!(y_floor > 0.0)) throw ConfigError("model: y_floor must be > 0");
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::kPropensity:
      return "propensity";
    case Stage::kCausal:
      return "causal";
    case Stage::kJoint:
      return "joint";
  }
  return "joint";
}

Stage stage_from_name(const std::string& name) {
  if (name == "propensity") return Stage::kPropensity;
  if (name == "causal") return Stage::kCausal;
  if (name == "joint") return Stage::kJoint;
  throw ConfigError("unknown stage '" + name + "'");
}

MlpSpec tower_spec(std::size_t in, std::size_t hidden, std::size_t out,
                   Activation hidden_act, Activation out_act) {
  if (hidden == 0) return MlpSpec{{in, out}, {out_act}};
  return MlpSpec{{in, hidden, out}, {hidden_act, out_act}};
}

MtdmlModel::MtdmlModel(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = spec_.rep_dim;
  const std::size_t k = spec_.treatment_dim;
  const Activation act = spec_.hidden_activation;
  bottom_ = Mlp(MlpSpec{{spec_.input_dim, spec_.shared_width}, {act}}, rng);
  const MlpSpec head{{spec_.shared_width, d}, {act}};
  head_i_ = Mlp(head, rng);
  head_c_ = Mlp(head, rng);
  head_a_ = Mlp(head, rng);
  f_t_ = Mlp(tower_spec(2 * d, spec_.tower_width, k, act, Activation::kIdentity), rng);
  f_y_ = Mlp(tower_spec(2 * d, spec_.tower_width, 1, act, Activation::kIdentity), rng);
  f_k_ = Mlp(tower_spec(3 * d, spec_.tower_width, k, act, Activation::kSoftplus), rng);
}

std::vector<Mlp*> MtdmlModel::trainable(Stage stage) {
  std::vector<Mlp*> out;
  if (stage != Stage::kCausal) {
    out.push_back(&bottom_);
    if (spec_.disentangle) out.push_back(&head_i_);
    out.push_back(&head_c_);
    if (spec_.disentangle) out.push_back(&head_a_);
    out.push_back(&f_t_);
    out.push_back(&f_y_);
  }
  if (stage != Stage::kPropensity) out.push_back(&f_k_);
  return out;
}

std::vector<Mlp*> MtdmlModel::networks() {
  return {&bottom_, &head_i_, &head_c_, &head_a_, &f_t_, &f_y_, &f_k_};
}

std::vector<const Mlp*> MtdmlModel::networks() const {
  return {&bottom_, &head_i_, &head_c_, &head_a_, &f_t_, &f_y_, &f_k_};
}

bool MtdmlModel::operator==(const MtdmlModel& other) const {
  if (spec_.input_dim != other.spec_.input_dim ||
      spec_.treatment_dim != other.spec_.treatment_dim ||
      spec_.disentangle != other.spec_.disentangle || spec_.signs != other.spec_.signs ||
      spec_.y_floor != other.spec_.y_floor) {
    return false;
  }
  auto a = networks();
  auto b = other.networks();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(*a[i] == *b[i])) return false;
  }
  return true;
}

namespace {

Tensor2 concat2(const Tensor2& a, const Tensor2& b) {
  const Tensor2* parts[] = {&a, &b};
  return concat_cols(parts);
}

Tensor2 concat3(const Tensor2& a, const Tensor2& b, const Tensor2& c) {
  const Tensor2* parts[] = {&a, &b, &c};
  return concat_cols(parts);
}

void check_x(const MtdmlModel& m, const Tensor2& x) {
  if (x.cols() != m.spec().input_dim) {
    throw DimensionError("model: x has " + std::to_string(x.cols()) +
                         " columns, expected " + std::to_string(m.spec().input_dim));
  }
}

void check_t(const MtdmlModel& m, const Tensor2& x, const Tensor2& t) {
  if (t.cols() != m.spec().treatment_dim || t.rows() != x.rows()) {
    throw DimensionError("model: t must be " + std::to_string(x.rows()) + "x" +
                         std::to_string(m.spec().treatment_dim));
  }
}

void check_reps(const MtdmlModel& m, const Tensor2& a, const Tensor2& b) {
  if (a.cols() != m.spec().rep_dim || b.cols() != m.spec().rep_dim ||
      a.rows() != b.rows()) {
    throw DimensionError("model: embedding shapes are inconsistent");
  }
}

OutcomePrediction link_outcome(const Tensor2& raw) {
  OutcomePrediction out;
  out.y_base.resize(raw.rows());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    double z = raw(i, 0);
    if (z > kMaxLogOutcome) {
      z = kMaxLogOutcome;
      ++out.clamped;
    }
    out.y_base[i] = std::exp(z);
  }
  return out;
}

// Forward pass retaining every cache needed by backprop.
struct Trace {
  MlpForward bottom, head_i, head_c, head_a, f_t, f_y, f_k;
  Representations reps;
  std::vector<double> z_y;  // raw log-outcome
  OutcomePrediction outcome;
  Tensor2 delta_t;
  std::vector<double> pre_floor;
  std::vector<double> y_final;
};

Trace trace_forward(const MtdmlModel& m, const Tensor2& x, const Tensor2& t) {
  Trace tr;
  tr.bottom = m.bottom().forward(x);
  const Tensor2& h = tr.bottom.output;
  tr.head_c = m.head_c().forward(h);
  if (m.spec().disentangle) {
    tr.head_i = m.head_i().forward(h);
    tr.head_a = m.head_a().forward(h);
    tr.reps = {tr.head_i.output, tr.head_c.output, tr.head_a.output};
  } else {
    tr.reps = {tr.head_c.output, tr.head_c.output, tr.head_c.output};
  }
  tr.f_t = m.f_t().forward(concat2(tr.reps.rep_i, tr.reps.rep_c));
  tr.f_y = m.f_y().forward(concat2(tr.reps.rep_c, tr.reps.rep_a));
  tr.f_k = m.f_k().forward(concat3(tr.reps.rep_i, tr.reps.rep_c, tr.reps.rep_a));
  tr.outcome = link_outcome(tr.f_y.output);

  const std::size_t n = x.rows();
  const std::size_t k = m.spec().treatment_dim;
  const Tensor2& t_hat = tr.f_t.output;
  const Tensor2& kappa = tr.f_k.output;
  tr.delta_t = Tensor2(n, k);
  tr.pre_floor.resize(n);
  tr.y_final.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = tr.outcome.y_base[i];
    for (std::size_t j = 0; j < k; ++j) {
      const double dt = t(i, j) - t_hat(i, j);
      tr.delta_t(i, j) = dt;
      s += m.spec().signs[j] * kappa(i, j) * dt;
    }
    tr.pre_floor[i] = s;
    tr.y_final[i] = std::max(s, m.spec().y_floor);
  }
  return tr;
}

LossWithGrad outcome_objective(OutcomeLoss kind, std::span<const double> y,
                               std::span<const double> y_hat, double rho) {
  return kind == OutcomeLoss::kTweedie ? tweedie_nll(y, y_hat, rho) : squared_error(y, y_hat);
}

void add_into(Tensor2& dst, const Tensor2& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Adds scale * d(rlo)/d(w_bar) into the first-layer weight gradient.
void add_mean_weight_grad(Mlp& head, std::span<const double> d_wbar, double scale) {
  DenseLayer& first = head.layers().front();
  const double per_col = scale / static_cast<double>(first.weight.cols());
  for (std::size_t r = 0; r < first.grad_weight.rows(); ++r) {
    for (std::size_t c = 0; c < first.grad_weight.cols(); ++c) {
      first.grad_weight(r, c) += per_col * d_wbar[r];
    }
  }
}

}  // namespace

Representations disentangle(const MtdmlModel& m, const Tensor2& x) {
  check_x(m, x);
  const Tensor2 h = m.bottom().predict(x);
  Tensor2 c = m.head_c().predict(h);
  if (!m.spec().disentangle) return {c, c, c};
  return {m.head_i().predict(h), std::move(c), m.head_a().predict(h)};
}

Tensor2 predict_treatment(const MtdmlModel& m, const Tensor2& rep_i, const Tensor2& rep_c) {
  check_reps(m, rep_i, rep_c);
  return m.f_t().predict(concat2(rep_i, rep_c));
}

OutcomePrediction predict_outcome(const MtdmlModel& m, const Tensor2& rep_c,
                                  const Tensor2& rep_a) {
  check_reps(m, rep_c, rep_a);
  return link_outcome(m.f_y().predict(concat2(rep_c, rep_a)));
}

Tensor2 predict_sensitivity(const MtdmlModel& m, const Tensor2& rep_i, const Tensor2& rep_c,
                            const Tensor2& rep_a) {
  check_reps(m, rep_i, rep_c);
  check_reps(m, rep_c, rep_a);
  return m.f_k().predict(concat3(rep_i, rep_c, rep_a));
}

std::vector<double> monotonic_head(const Tensor2& kappa, const Tensor2& delta_t,
                                   std::span<const int> signs,
                                   std::span<const double> y_base, double y_floor) {
  if (kappa.rows() != delta_t.rows() || kappa.cols() != delta_t.cols() ||
      kappa.cols() != signs.size() || kappa.rows() != y_base.size()) {
    throw DimensionError("monotonic_head: inconsistent shapes");
  }
  std::vector<double> out(y_base.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = y_base[i];
    for (std::size_t k = 0; k < signs.size(); ++k) {
      s += signs[k] * kappa(i, k) * delta_t(i, k);
    }
    out[i] = std::max(s, y_floor);
  }
  return out;
}

ForwardOutput forward(const MtdmlModel& m, const Tensor2& x, const Tensor2& t) {
  check_x(m, x);
  check_t(m, x, t);
  ForwardOutput out;
  out.reps = disentangle(m, x);
  out.t_hat = predict_treatment(m, out.reps.rep_i, out.reps.rep_c);
  OutcomePrediction yb = predict_outcome(m, out.reps.rep_c, out.reps.rep_a);
  out.y_base = std::move(yb.y_base);
  out.clamped = yb.clamped;
  out.kappa = predict_sensitivity(m, out.reps.rep_i, out.reps.rep_c, out.reps.rep_a);
  out.delta_t = Tensor2(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.delta_t.values()[i] = t.values()[i] - out.t_hat.values()[i];
  }
  out.y_final =
      monotonic_head(out.kappa, out.delta_t, m.spec().signs, out.y_base, m.spec().y_floor);
  return out;
}

std::vector<double> uplift(const MtdmlModel& m, const Tensor2& x,
                           std::span<const double> t_from, std::span<const double> t_to) {
  const std::size_t k = m.spec().treatment_dim;
  if (t_from.size() != k || t_to.size() != k) {
    throw DimensionError("uplift: treatment vectors must have length " + std::to_string(k));
  }
  const Representations reps = disentangle(m, x);
  const Tensor2 kappa = predict_sensitivity(m, reps.rep_i, reps.rep_c, reps.rep_a);
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      s += m.spec().signs[j] * kappa(i, j) * (t_to[j] - t_from[j]);
    }
    out[i] = s;
  }
  return out;
}

std::vector<double> mean_head_weight(const Mlp& head) {
  const Tensor2& w = head.layers().front().weight;
  std::vector<double> out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (double v : w.row(r)) out[r] += v;
    out[r] /= static_cast<double>(w.cols());
  }
  return out;
}

double model_rlo(const MtdmlModel& m) {
  return rlo_penalty(mean_head_weight(m.head_i()), mean_head_weight(m.head_c()),
                     mean_head_weight(m.head_a()));
}

StageLoss model_loss_and_grads(MtdmlModel& m, const Tensor2& x, const Tensor2& t,
                               std::span<const double> y, const LossWeights& w,
                               Stage stage, OutcomeLoss outcome_loss) {
  check_x(m, x);
  check_t(m, x, t);
  if (x.rows() == 0) throw DimensionError("model_loss_and_grads: empty batch");
  if (y.size() != x.rows()) throw DimensionError("model_loss_and_grads: y length mismatch");
  for (double v : y) {
    if (!(v >= 0.0)) throw DomainError("model_loss_and_grads: outcomes must be >= 0");
  }
  for (Mlp* net : m.networks()) net->zero_grad();

  const ModelSpec& spec = m.spec();
  const std::size_t n = x.rows();
  const std::size_t k = spec.treatment_dim;
  const std::size_t d = spec.rep_dim;
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool propensity = stage != Stage::kCausal;
  const bool causal = stage != Stage::kPropensity;

  Trace tr = trace_forward(m, x, t);
  const Tensor2& t_hat = tr.f_t.output;
  const Tensor2& kappa = tr.f_k.output;

  StageLoss result;
  result.has_rlo = propensity && spec.disentangle;

  Tensor2 d_t_hat(n, k);
  std::vector<double> d_y_base(n, 0.0);
  Tensor2 d_kappa(n, k);

  if (propensity) {
    result.components.treatment = treatment_loss(t, t_hat);
    d_t_hat = treatment_loss_grad(t, t_hat);
    LossWithGrad lo = outcome_objective(outcome_loss, y, tr.outcome.y_base, w.rho);
    result.components.outcome = lo.value;
    for (std::size_t i = 0; i < n; ++i) d_y_base[i] += lo.grad[i] * inv_n;
  }
  if (causal) {
    LossWithGrad lf = outcome_objective(outcome_loss, y, tr.y_final, w.rho);
    result.components.final_outcome = lf.value;
    result.components.kreg = k_reg(kappa);
    for (std::size_t i = 0; i < n; ++i) {
      // Gradient is zero where the floor clamp is active.
      const double ds = tr.pre_floor[i] > spec.y_floor ? lf.grad[i] * inv_n : 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double sgn = spec.signs[j];
        d_kappa(i, j) = ds * sgn * tr.delta_t(i, j) + w.lambda_k * 2.0 * kappa(i, j) * inv_n;
        if (stage == Stage::kJoint) {
          d_t_hat(i, j) -= ds * sgn * kappa(i, j);
        }
      }
      if (stage == Stage::kJoint) d_y_base[i] += ds;
    }
  }
  RloGrad rlo;
  if (result.has_rlo) {
    rlo = rlo_penalty_grad(mean_head_weight(m.head_i()), mean_head_weight(m.head_c()),
                           mean_head_weight(m.head_a()));
    result.components.rlo = rlo.value;
  }
  result.total = total_loss(result.components, w);

  // Backprop. Causal stage stops at f_k.
  Tensor2 d_kappa_in;
  if (causal) d_kappa_in = m.f_k().backward(tr.f_k.cache, d_kappa);
  if (!propensity) return result;

  Tensor2 d_zy(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const bool capped = tr.f_y.output(i, 0) > kMaxLogOutcome;
    d_zy(i, 0) = capped ? 0.0 : d_y_base[i] * tr.outcome.y_base[i];
  }
  const Tensor2 d_omega = m.f_t().backward(tr.f_t.cache, d_t_hat);
  const Tensor2 d_phi = m.f_y().backward(tr.f_y.cache, d_zy);

  Tensor2 d_i = slice_cols(d_omega, 0, d);
  Tensor2 d_c = slice_cols(d_omega, d, d);
  add_into(d_c, slice_cols(d_phi, 0, d));
  Tensor2 d_a = slice_cols(d_phi, d, d);
  if (stage == Stage::kJoint) {
    add_into(d_i, slice_cols(d_kappa_in, 0, d));
    add_into(d_c, slice_cols(d_kappa_in, d, d));
    add_into(d_a, slice_cols(d_kappa_in, 2 * d, d));
  }

  Tensor2 d_h;
  if (spec.disentangle) {
    d_h = m.head_i().backward(tr.head_i.cache, d_i);
    add_into(d_h, m.head_c().backward(tr.head_c.cache, d_c));
    add_into(d_h, m.head_a().backward(tr.head_a.cache, d_a));
    add_mean_weight_grad(m.head_i(), rlo.d_i, w.lambda_rlo);
    add_mean_weight_grad(m.head_c(), rlo.d_c, w.lambda_rlo);
    add_mean_weight_grad(m.head_a(), rlo.d_a, w.lambda_rlo);
  } else {
    add_into(d_c, d_i);
    add_into(d_c, d_a);
    d_h = m.head_c().backward(tr.head_c.cache, d_c);
  }
  m.bottom().backward(tr.bottom.cache, d_h);
  return result;
}

}  // namespace mtdml
