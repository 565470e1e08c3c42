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

#include "mtdml/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtdml/error.hpp"

namespace mtdml {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) throw DimensionError(std::string(what) + ": length mismatch");
  if (a.empty()) throw DimensionError(std::string(what) + ": empty input");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Q(p) for p = 0..N in ranking order.
std::vector<double> qini_values(const BinaryEvalView& view) {
  const std::size_t n = view.size();
  if (view.score.size() != n || view.treated.size() != n) {
    throw DimensionError("qini: view columns differ in length");
  }
  const std::size_t n_treated = view.num_treated();
  if (n_treated == 0 || n_treated == n) {
    throw CapabilityError("qini: both treated and control samples are required");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return view.score[a] > view.score[b];
  });
  std::vector<double> q(n + 1, 0.0);
  double y_t = 0.0, y_c = 0.0;
  std::size_t n_t = 0, n_c = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t i = order[p];
    if (view.treated[i]) {
      y_t += view.y[i];
      ++n_t;
    } else {
      y_c += view.y[i];
      ++n_c;
    }
    q[p + 1] = n_c == 0 ? y_t : y_t - y_c * static_cast<double>(n_t) / static_cast<double>(n_c);
  }
  return q;
}

}  // namespace

std::size_t BinaryEvalView::num_treated() const {
  return static_cast<std::size_t>(std::count(treated.begin(), treated.end(), 1));
}

double pehe(std::span<const double> tau_hat, std::span<const double> tau_true) {
  check_lengths(tau_hat, tau_true, "pehe");
  double s = 0.0;
  for (std::size_t i = 0; i < tau_hat.size(); ++i) {
    const double d = tau_hat[i] - tau_true[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(tau_hat.size()));
}

double eps_ate(std::span<const double> tau_hat, std::span<const double> tau_true) {
  check_lengths(tau_hat, tau_true, "eps_ate");
  return std::abs(mean_of(tau_hat) - mean_of(tau_true));
}

double eps_att(std::span<const double> tau_hat, std::span<const double> tau_true,
               std::span<const std::uint8_t> treated) {
  check_lengths(tau_hat, tau_true, "eps_att");
  if (treated.size() != tau_hat.size()) throw DimensionError("eps_att: length mismatch");
  double a = 0.0, b = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < tau_hat.size(); ++i) {
    if (!treated[i]) continue;
    a += tau_hat[i];
    b += tau_true[i];
    ++n;
  }
  if (n == 0) throw CapabilityError("eps_att: no treated samples");
  return std::abs(a - b) / static_cast<double>(n);
}

double policy_risk(std::span<const std::uint8_t> policy, std::span<const double> mu1,
                   std::span<const double> mu0) {
  check_lengths(mu1, mu0, "policy_risk");
  if (policy.size() != mu1.size()) throw DimensionError("policy_risk: length mismatch");
  double scale = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) scale = std::max({scale, mu1[i], mu0[i]});
  if (!(scale > 0.0)) throw DomainError("policy_risk: arm means must not all be <= 0");
  double value = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) value += policy[i] ? mu1[i] : mu0[i];
  return 1.0 - value / static_cast<double>(mu1.size()) / scale;
}

double qini_auuc(const BinaryEvalView& view) {
  const std::vector<double> q = qini_values(view);
  const std::size_t n = view.size();
  double area = 0.0;
  for (std::size_t p = 1; p <= n; ++p) area += 0.5 * (q[p - 1] + q[p]);
  const double diagonal = 0.5 * static_cast<double>(n) * q[n];
  return (area - diagonal) / static_cast<double>(n);
}

std::vector<CurvePoint> uplift_curve(const BinaryEvalView& view) {
  const std::vector<double> q = qini_values(view);
  const double n = static_cast<double>(view.size());
  std::vector<CurvePoint> out(q.size());
  for (std::size_t p = 0; p < q.size(); ++p) {
    out[p] = {static_cast<double>(p) / n, q[p]};
  }
  return out;
}

double pcoc(std::span<const double> y_hat, std::span<const double> y) {
  check_lengths(y_hat, y, "pcoc");
  const double observed = mean_of(y);
  if (observed == 0.0) throw DomainError("pcoc: observed mean is zero");
  return mean_of(y_hat) / observed;
}

double median(std::vector<double> v) {
  if (v.empty()) throw DimensionError("median: empty input");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

std::vector<double> column_means(const Tensor2& t) {
  std::vector<double> out(t.cols(), 0.0);
  if (t.rows() == 0) return out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) out[c] += t(r, c);
  }
  for (double& v : out) v /= static_cast<double>(t.rows());
  return out;
}

BinaryEvalView make_binary_view(const Dataset& d, std::size_t dim, double threshold,
                                std::vector<double> scores) {
  if (dim >= d.num_treatments()) {
    throw DimensionError("binarize: treatment dimension " + std::to_string(dim) +
                         " out of range");
  }
  if (scores.size() != d.size()) throw DimensionError("binarize: score length mismatch");
  BinaryEvalView v;
  v.score = std::move(scores);
  v.y = d.y;
  v.treated.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) v.treated[i] = d.t(i, dim) > threshold ? 1 : 0;
  v.record.dim = dim;
  v.record.threshold = threshold;
  return v;
}

BinaryEvalView binarize(const Dataset& d, std::size_t dim, double threshold,
                        const CrossFitEnsemble& e, double contrast,
                        std::vector<double> t_base) {
  if (dim >= d.num_treatments()) {
    throw DimensionError("binarize: treatment dimension " + std::to_string(dim) +
                         " out of range");
  }
  if (t_base.empty()) t_base = column_means(d.t);
  if (t_base.size() != d.num_treatments()) {
    throw DimensionError("binarize: baseline treatment has wrong length");
  }
  std::vector<double> t_to = t_base;
  t_to[dim] += contrast;
  BinaryEvalView v = make_binary_view(d, dim, threshold, ensemble_uplift(e, d.x, t_base, t_to));
  v.record.contrast = contrast;
  v.record.t_base = std::move(t_base);
  return v;
}

Evaluation evaluate(const CrossFitEnsemble& e, const Dataset& d, const EvalSettings& s) {
  d.validate();
  if (d.size() == 0) throw DimensionError("evaluate: empty dataset");
  if (s.dim >= d.num_treatments()) {
    throw DimensionError("evaluate: treatment dimension " + std::to_string(s.dim) +
                         " out of range");
  }
  Evaluation ev;
  MetricsReport& r = ev.report;
  r.n_evaluated = d.size();

  const EnsemblePrediction pred = ensemble_predict(e, d.x, d.t);
  const double mean_y = std::accumulate(d.y.begin(), d.y.end(), 0.0);
  if (mean_y > 0.0) r.pcoc = pcoc(pred.y_final, d.y);

  std::vector<double> t_col(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t_col[i] = d.t(i, s.dim);
  const double threshold = s.threshold ? *s.threshold : median(t_col);
  ev.view = binarize(d, s.dim, threshold, e, s.contrast, s.t_base);
  const std::size_t n_treated = ev.view.num_treated();
  const bool both_arms = n_treated > 0 && n_treated < d.size();
  if (both_arms) {
    r.qini_auuc = qini_auuc(ev.view);
    ev.curve = uplift_curve(ev.view);
  }

  if (d.truth) {
    const std::vector<double>& t_from = ev.view.record.t_base;
    std::vector<double> t_to = t_from;
    t_to[s.dim] += s.contrast;
    const ContrastTruth truth = true_contrast(d, t_from, t_to);
    r.pehe = pehe(ev.view.score, truth.tau);
    r.eps_ate = eps_ate(ev.view.score, truth.tau);
    if (n_treated > 0) r.eps_att = eps_att(ev.view.score, truth.tau, ev.view.treated);
    std::vector<double> mu1(d.size()), mu0(d.size());
    std::vector<std::uint8_t> policy(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      mu1[i] = true_mean(*d.truth, i, t_to);
      mu0[i] = true_mean(*d.truth, i, t_from);
      policy[i] = ev.view.score[i] > 0.0 ? 1 : 0;
    }
    r.policy_risk = policy_risk(policy, mu1, mu0);
  }
  return ev;
}

}  // namespace mtdml
