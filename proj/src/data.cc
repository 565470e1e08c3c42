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

#include "mtdml/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "mtdml/error.hpp"
#include "mtdml/mlp.hpp"

namespace mtdml {

std::string effect_kind_name(EffectKind k) {
  switch (k) {
    case EffectKind::kConstant:
      return "constant";
    case EffectKind::kLinear:
      return "linear";
    case EffectKind::kGrouped:
      return "grouped";
  }
  return "constant";
}

EffectKind effect_kind_from_name(const std::string& name) {
  if (name == "constant") return EffectKind::kConstant;
  if (name == "linear") return EffectKind::kLinear;
  if (name == "grouped") return EffectKind::kGrouped;
  throw ConfigError("unknown effect kind '" + name + "'");
}

void DgpConfig::validate() const {
  if (n == 0) throw ConfigError("dgp: n must be >= 1");
  if (d_c == 0) throw ConfigError("dgp: d_c must be >= 1");
  if (k_t == 0) throw ConfigError("dgp: k_t must be >= 1");
  if (!(gamma >= 0.0)) throw ConfigError("dgp: gamma must be >= 0");
  if (!(rho > 1.0 && rho < 2.0)) throw ConfigError("dgp: rho must lie in (1, 2)");
  if (!(phi > 0.0)) throw ConfigError("dgp: phi must be > 0");
  if (!(sigma_t >= 0.0)) throw ConfigError("dgp: sigma_t must be >= 0");
  if (!std::isfinite(t_shift)) throw ConfigError("dgp: t_shift must be finite");
  if (!(effect_constant >= 0.0)) throw ConfigError("dgp: effect_constant must be >= 0");
  if (!(slope_hi >= 0.0) || !(slope_lo >= 0.0)) {
    throw ConfigError("dgp: group slopes must be >= 0");
  }
}

void Dataset::validate() const {
  const std::size_t n = y.size();
  if (x.rows() != n || t.rows() != n) {
    throw DimensionError("dataset: x, t and y row counts disagree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] >= 0.0)) {
      throw DomainError("dataset: negative outcome at row " + std::to_string(i));
    }
  }
  if (truth) {
    if (truth->kappa.rows() != n || truth->kappa.cols() != t.cols() ||
        truth->mu0.size() != n) {
      throw DimensionError("dataset: ground-truth shapes disagree with data");
    }
    for (double k : truth->kappa.values()) {
      if (!(k >= 0.0)) throw DomainError("dataset: negative true kappa");
    }
  }
}

Dataset subset(const Dataset& d, std::span<const std::size_t> rows) {
  Dataset out;
  out.x = gather_rows(d.x, rows);
  out.t = gather_rows(d.t, rows);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) out.y.push_back(d.y[r]);
  if (d.truth) {
    GroundTruth g;
    g.kappa = gather_rows(d.truth->kappa, rows);
    for (std::size_t r : rows) g.mu0.push_back(d.truth->mu0[r]);
    out.truth = std::move(g);
  }
  out.roles = d.roles;
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct DgpCoefficients {
  std::vector<std::vector<double>> w;  // per treatment, over I and C
  std::vector<std::vector<double>> v;  // per treatment, over C and A
  std::vector<double> u;               // over C and A
};

DgpCoefficients draw_coefficients(const DgpConfig& cfg) {
  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0xD6E8FEB86659FD93ULL));
  // Positive loadings keep treatment and baseline outcome aligned through C.
  std::uniform_real_distribution<double> positive(0.5, 1.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  DgpCoefficients c;
  const std::size_t n_ic = cfg.d_i + cfg.d_c;
  const std::size_t n_ca = cfg.d_c + cfg.d_a;
  for (std::size_t k = 0; k < cfg.k_t; ++k) {
    std::vector<double> wk(n_ic);
    for (double& x : wk) x = positive(rng);
    c.w.push_back(std::move(wk));
  }
  for (std::size_t k = 0; k < cfg.k_t; ++k) {
    std::vector<double> vk(n_ca);
    for (double& x : vk) x = normal(rng);
    c.v.push_back(std::move(vk));
  }
  c.u.resize(n_ca);
  for (double& x : c.u) x = positive(rng);
  return c;
}

void generate_rows(const DgpConfig& cfg, const DgpCoefficients& coef, std::size_t begin,
                   std::size_t end, Dataset& out) {
  const std::size_t d = cfg.num_covariates();
  const std::size_t ic_end = cfg.d_i + cfg.d_c;
  const double ic_norm = std::sqrt(static_cast<double>(cfg.d_i + cfg.d_c));
  const double ca_norm = std::sqrt(static_cast<double>(cfg.d_c + cfg.d_a));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = begin; i < end; ++i) {
    std::mt19937_64 rng(splitmix64(cfg.seed + 0x9E3779B97F4A7C15ULL * (i + 1)));
    auto x = out.x.row(i);
    for (std::size_t j = 0; j < d; ++j) x[j] = normal(rng);

    double base = 0.0;
    for (std::size_t j = cfg.d_i; j < d; ++j) base += coef.u[j - cfg.d_i] * x[j];
    const double mu0 = softplus(base / ca_norm) + 0.1;
    out.truth->mu0[i] = mu0;

    double mu = mu0;
    for (std::size_t k = 0; k < cfg.k_t; ++k) {
      double score = 0.0;
      for (std::size_t j = 0; j < ic_end; ++j) score += coef.w[k][j] * x[j];
      const double tk = cfg.t_shift + cfg.gamma * score / ic_norm + cfg.sigma_t * normal(rng);
      out.t(i, k) = tk;

      double kappa = 0.0;
      switch (cfg.effect) {
        case EffectKind::kConstant:
          kappa = cfg.effect_constant;
          break;
        case EffectKind::kLinear: {
          double s = 0.0;
          for (std::size_t j = cfg.d_i; j < d; ++j) s += coef.v[k][j - cfg.d_i] * x[j];
          kappa = softplus(s / ca_norm);
          break;
        }
        case EffectKind::kGrouped:
          kappa = x[cfg.d_i] >= 0.0 ? cfg.slope_hi : cfg.slope_lo;
          break;
      }
      out.truth->kappa(i, k) = kappa;
      mu += kappa * std::max(tk, 0.0);
    }
    mu = std::max(mu, kMinTrueMean);
    out.y[i] = sample_tweedie(mu, cfg.rho, cfg.phi, rng);
  }
}

}  // namespace

Dataset generate_synthetic(const DgpConfig& cfg, unsigned threads) {
  cfg.validate();
  const DgpCoefficients coef = draw_coefficients(cfg);
  Dataset out;
  out.x = Tensor2(cfg.n, cfg.num_covariates());
  out.t = Tensor2(cfg.n, cfg.k_t);
  out.y.assign(cfg.n, 0.0);
  out.truth = GroundTruth{Tensor2(cfg.n, cfg.k_t), std::vector<double>(cfg.n)};
  out.roles = RoleSplit{cfg.d_i, cfg.d_c, cfg.d_a};

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.n)));
  if (threads == 1) {
    generate_rows(cfg, coef, 0, cfg.n, out);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (cfg.n + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(cfg.n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] { generate_rows(cfg, coef, begin, end, out); });
  }
  for (auto& th : pool) th.join();
  return out;
}

double tweedie_poisson_rate(double mu, double rho, double phi) {
  return std::pow(mu, 2.0 - rho) / (phi * (2.0 - rho));
}

double true_mean(const GroundTruth& truth, std::size_t i, std::span<const double> t) {
  double mu = truth.mu0[i];
  for (std::size_t k = 0; k < t.size(); ++k) mu += truth.kappa(i, k) * std::max(t[k], 0.0);
  return std::max(mu, kMinTrueMean);
}

ContrastTruth true_contrast(const Dataset& d, std::span<const double> t_from,
                            std::span<const double> t_to) {
  if (!d.truth) throw CapabilityError("true_contrast: dataset has no ground truth");
  const std::size_t k = d.num_treatments();
  if (t_from.size() != k || t_to.size() != k) {
    throw DimensionError("true_contrast: treatment vectors must have length " +
                         std::to_string(k));
  }
  ContrastTruth out;
  out.tau.resize(d.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double tau = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      tau += d.truth->kappa(i, j) * (std::max(t_to[j], 0.0) - std::max(t_from[j], 0.0));
    }
    out.tau[i] = tau;
    sum += tau;
  }
  out.ate = d.size() > 0 ? sum / static_cast<double>(d.size()) : 0.0;
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  out.push_back(cell);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Counts consecutive columns prefix0, prefix1, ... present in the header.
std::size_t count_indexed(const std::map<std::string, std::size_t>& cols,
                          const std::string& prefix) {
  std::size_t n = 0;
  while (cols.count(prefix + std::to_string(n))) ++n;
  return n;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (!cols.emplace(name, c).second) {
      throw ParseError(path + ": duplicate column '" + name + "'");
    }
  }

  const std::size_t d = count_indexed(cols, "x_");
  const std::size_t k = count_indexed(cols, "t_");
  if (d == 0) throw ParseError(path + ": missing column 'x_0'");
  if (k == 0) throw ParseError(path + ": missing column 't_0'");
  if (!cols.count("y")) throw ParseError(path + ": missing column 'y'");
  const std::size_t kk = count_indexed(cols, "kappa_true_");
  const bool has_mu0 = cols.count("mu0_true") > 0;
  if (kk != 0 && kk != k) {
    throw ParseError(path + ": expected " + std::to_string(k) +
                     " kappa_true_ columns, found " + std::to_string(kk));
  }
  if ((kk != 0) != has_mu0) {
    throw ParseError(path + ": ground truth needs both kappa_true_* and 'mu0_true'");
  }
  const bool has_truth = has_mu0;

  std::vector<std::size_t> x_idx(d), t_idx(k), k_idx(has_truth ? k : 0);
  for (std::size_t j = 0; j < d; ++j) x_idx[j] = cols.at("x_" + std::to_string(j));
  for (std::size_t j = 0; j < k; ++j) t_idx[j] = cols.at("t_" + std::to_string(j));
  for (std::size_t j = 0; j < k_idx.size(); ++j) {
    k_idx[j] = cols.at("kappa_true_" + std::to_string(j));
  }
  const std::size_t y_idx = cols.at("y");
  const std::size_t mu0_idx = has_truth ? cols.at("mu0_true") : 0;

  std::vector<double> xv, tv, kv, yv, mu0v;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(path + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    }
    auto cell = [&](std::size_t c) {
      const std::string s = trim(cells[c]);
      double v = 0.0;
      const char* first = s.data();
      const char* last = s.data() + s.size();
      auto res = std::from_chars(first, last, v);
      if (s.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        throw ParseError(path + ": line " + std::to_string(line_no) + ", column '" +
                         trim(header[c]) + "': not a finite number: '" + s + "'");
      }
      return v;
    };
    for (std::size_t c : x_idx) xv.push_back(cell(c));
    for (std::size_t c : t_idx) tv.push_back(cell(c));
    const double y = cell(y_idx);
    if (y < 0.0) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ", column 'y': negative outcome " + format_double(y));
    }
    yv.push_back(y);
    if (has_truth) {
      for (std::size_t c : k_idx) {
        const double kappa = cell(c);
        if (kappa < 0.0) {
          throw ParseError(path + ": line " + std::to_string(line_no) + ", column '" +
                           trim(header[c]) + "': negative true kappa");
        }
        kv.push_back(kappa);
      }
      mu0v.push_back(cell(mu0_idx));
    }
  }

  const std::size_t n = yv.size();
  Dataset out;
  out.x = Tensor2(n, d, std::move(xv));
  out.t = Tensor2(n, k, std::move(tv));
  out.y = std::move(yv);
  if (has_truth) out.truth = GroundTruth{Tensor2(n, k, std::move(kv)), std::move(mu0v)};
  return out;
}

void save_csv(const Dataset& d, const std::string& path) {
  d.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::size_t dx = d.num_covariates();
  const std::size_t k = d.num_treatments();
  std::string buf;
  for (std::size_t j = 0; j < dx; ++j) buf += "x_" + std::to_string(j) + ",";
  for (std::size_t j = 0; j < k; ++j) buf += "t_" + std::to_string(j) + ",";
  buf += "y";
  if (d.truth) {
    for (std::size_t j = 0; j < k; ++j) buf += ",kappa_true_" + std::to_string(j);
    buf += ",mu0_true";
  }
  buf += '\n';
  out << buf;
  for (std::size_t i = 0; i < d.size(); ++i) {
    buf.clear();
    for (double v : d.x.row(i)) {
      buf += format_double(v);
      buf += ',';
    }
    for (double v : d.t.row(i)) {
      buf += format_double(v);
      buf += ',';
    }
    buf += format_double(d.y[i]);
    if (d.truth) {
      for (double v : d.truth->kappa.row(i)) {
        buf += ',';
        buf += format_double(v);
      }
      buf += ',';
      buf += format_double(d.truth->mu0[i]);
    }
    buf += '\n';
    out << buf;
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

OutcomeSummary summarize_outcome(std::span<const double> y) {
  OutcomeSummary s;
  if (y.empty()) return s;
  const double n = static_cast<double>(y.size());
  double sum = 0.0;
  std::size_t zeros = 0;
  for (double v : y) {
    sum += v;
    if (v == 0.0) ++zeros;
  }
  s.mean = sum / n;
  s.zero_fraction = static_cast<double>(zeros) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : y) {
    const double c = v - s.mean;
    m2 += c * c;
    m3 += c * c * c;
  }
  m2 /= n;
  m3 /= n;
  s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  return s;
}

}  // namespace mtdml
