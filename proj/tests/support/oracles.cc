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


#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace mtdml::oracle {

namespace {

std::vector<std::size_t> rank_by_selection(const std::vector<double>& score) {
  const std::size_t n = score.size();
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (pick == n || score[i] > score[pick]) pick = i;
    }
    taken[pick] = true;
    order.push_back(pick);
  }
  return order;
}

}  // namespace

std::vector<double> qini_points(const std::vector<double>& score,
                                const std::vector<std::uint8_t>& treated,
                                const std::vector<double>& y) {
  const std::vector<std::size_t> order = rank_by_selection(score);
  std::vector<double> q;
  for (std::size_t p = 0; p <= order.size(); ++p) {
    double yt = 0.0, yc = 0.0, nt = 0.0, nc = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t i = order[j];
      if (treated[i]) {
        yt += y[i];
        nt += 1.0;
      } else {
        yc += y[i];
        nc += 1.0;
      }
    }
    q.push_back(nc == 0.0 ? yt : yt - yc * nt / nc);
  }
  return q;
}

double qini(const std::vector<double>& score, const std::vector<std::uint8_t>& treated,
            const std::vector<double>& y) {
  const std::vector<double> q = qini_points(score, treated, y);
  const double n = static_cast<double>(score.size());
  double area = 0.0;
  for (std::size_t p = 1; p < q.size(); ++p) area += (q[p - 1] + q[p]) / 2.0;
  return (area - n * q.back() / 2.0) / n;
}

double policy_risk(const std::vector<std::uint8_t>& policy, const std::vector<double>& mu1,
                   const std::vector<double>& mu0) {
  double scale = 0.0;
  for (double v : mu1) scale = std::max(scale, v);
  for (double v : mu0) scale = std::max(scale, v);
  double total = 0.0;
  for (std::size_t i = 0; i < policy.size(); ++i) {
    total += policy[i] == 1 ? mu1[i] : mu0[i];
  }
  return 1.0 - (total / static_cast<double>(policy.size())) / scale;
}

PolicyRange policy_risk_range(const std::vector<double>& mu1, const std::vector<double>& mu0) {
  const std::size_t n = mu1.size();
  if (n > 20) throw std::invalid_argument("policy_risk_range: too many samples");
  PolicyRange r{INFINITY, -INFINITY};
  std::vector<std::uint8_t> policy(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) policy[i] = (mask >> i) & 1U;
    const double v = policy_risk(policy, mu1, mu0);
    r.best = std::min(r.best, v);
    r.worst = std::max(r.worst, v);
  }
  return r;
}

std::vector<double> ols(const std::vector<std::vector<double>>& columns,
                        const std::vector<double>& y) {
  const std::size_t p = columns.size() + 1;
  const std::size_t n = y.size();
  auto regressor = [&](std::size_t j, std::size_t i) { return j == 0 ? 1.0 : columns[j - 1][i]; };
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += regressor(r, i) * regressor(c, i);
      a[r][p] += regressor(r, i) * y[i];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    if (a[c][c] == 0.0) throw std::runtime_error("ols: singular design");
    for (std::size_t r = c + 1; r < p; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t r = p; r-- > 0;) {
    double s = a[r][p];
    for (std::size_t k = r + 1; k < p; ++k) s -= a[r][k] * beta[k];
    beta[r] = s / a[r][r];
  }
  return beta;
}

std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> theta, double h) {
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = theta[i];
    theta[i] = saved + h;
    const double up = f(theta);
    theta[i] = saved - h;
    const double down = f(theta);
    theta[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace mtdml::oracle
