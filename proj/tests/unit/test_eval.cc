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


#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mtdml/data.hpp"
#include "mtdml/error.hpp"
#include "mtdml/eval.hpp"
#include "mtdml/training.hpp"
#include "oracles.hpp"

namespace mtdml {
namespace {

BinaryEvalView make_view(std::vector<double> score, std::vector<std::uint8_t> treated,
                         std::vector<double> y) {
  BinaryEvalView v;
  v.score = std::move(score);
  v.treated = std::move(treated);
  v.y = std::move(y);
  return v;
}

// Untrained two-model ensemble over d; enough for plumbing checks.
CrossFitEnsemble untrained_ensemble(const Dataset& d) {
  ModelSpec s;
  s.input_dim = d.num_covariates();
  s.treatment_dim = d.num_treatments();
  s.shared_width = 8;
  s.rep_dim = 4;
  s.tower_width = 4;
  CrossFitEnsemble e;
  e.scaler = scaler_fit(d.x);
  e.model_a = MtdmlModel(s, 1);
  e.model_b = MtdmlModel(s, 2);
  e.fold = assign_folds(d.size(), 3);
  return e;
}

TEST(PeheTest, HandValues) {
  const std::vector<double> tau{0.0, 0.0}, same{1.0, -2.0};
  EXPECT_EQ(pehe(same, same), 0.0);
  const std::vector<double> hat{1.0, 2.0};
  EXPECT_DOUBLE_EQ(pehe(hat, tau), std::sqrt(2.5));
  const std::vector<double> shifted{1.5, -1.5};
  EXPECT_DOUBLE_EQ(pehe(shifted, same), 0.5);
}

TEST(EpsAteTest, HandValues) {
  const std::vector<double> ones{1.0, 1.0};
  EXPECT_EQ(eps_ate(std::vector<double>{2.0, 0.0}, ones), 0.0);
  EXPECT_EQ(eps_ate(std::vector<double>{3.0, 1.0}, ones), 1.0);
}

TEST(EpsAttTest, HandValues) {
  const std::vector<double> hat{2.0, 9.0, 4.0}, tau{1.0, 9.0, 1.0};
  const std::vector<std::uint8_t> treated{1, 0, 1}, all{1, 1, 1}, none{0, 0, 0};
  EXPECT_EQ(eps_att(hat, tau, treated), 2.0);
  EXPECT_NEAR(eps_att(hat, tau, all), eps_ate(hat, tau), 1e-15);
  EXPECT_EQ(eps_att(tau, tau, treated), 0.0);
  EXPECT_THROW(eps_att(hat, tau, none), CapabilityError);
}

TEST(PcocTest, HandValues) {
  const std::vector<double> y{2.0, 2.0}, hat{1.0, 3.0};
  EXPECT_EQ(pcoc(y, y), 1.0);
  EXPECT_EQ(pcoc(hat, y), 1.0);
  const std::vector<double> doubled{4.0, 4.0}, zero{0.0, 0.0};
  EXPECT_EQ(pcoc(doubled, y), 2.0);
  EXPECT_THROW(pcoc(y, zero), DomainError);
}

TEST(MetricShapeTest, LengthMismatchThrows) {
  const std::vector<double> a{1.0}, b{1.0, 2.0};
  EXPECT_THROW(pehe(a, b), DimensionError);
  EXPECT_THROW(pcoc(a, b), DimensionError);
}

TEST(PolicyRiskTest, HandValue) {
  const std::vector<std::uint8_t> pi{1, 0};
  const std::vector<double> mu1{2.0, 1.0}, mu0{1.0, 3.0};
  EXPECT_NEAR(policy_risk(pi, mu1, mu0), 1.0 / 6.0, 1e-15);
}

TEST(PolicyRiskTest, MatchesBruteForceOverAllPolicies) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<double> mu1(n), mu0(n);
    for (std::size_t i = 0; i < n; ++i) {
      mu1[i] = u(rng);
      mu0[i] = u(rng);
    }
    std::vector<std::uint8_t> policy(n), oracle_pi(n), anti(n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) policy[i] = (mask >> i) & 1U;
      ASSERT_NEAR(policy_risk(policy, mu1, mu0), oracle::policy_risk(policy, mu1, mu0), 1e-12);
    }
    for (std::size_t i = 0; i < n; ++i) {
      oracle_pi[i] = mu1[i] > mu0[i] ? 1 : 0;
      anti[i] = 1 - oracle_pi[i];
    }
    const oracle::PolicyRange range = oracle::policy_risk_range(mu1, mu0);
    EXPECT_NEAR(policy_risk(oracle_pi, mu1, mu0), range.best, 1e-12);
    EXPECT_NEAR(policy_risk(anti, mu1, mu0), range.worst, 1e-12);
  }
}

TEST(PolicyRiskTest, EqualArmsMakePolicyIrrelevant) {
  const std::vector<double> mu{1.0, 2.0, 0.5};
  const double base = policy_risk(std::vector<std::uint8_t>{0, 0, 0}, mu, mu);
  EXPECT_EQ(policy_risk(std::vector<std::uint8_t>{1, 0, 1}, mu, mu), base);
  EXPECT_EQ(policy_risk(std::vector<std::uint8_t>{1, 1, 1}, mu, mu), base);
}

TEST(QiniTest, HandValue) {
  const BinaryEvalView v = make_view({4, 3, 2, 1}, {1, 0, 1, 0}, {1, 0, 0, 1});
  // Q(p) = 0, 1, 1, 1, 0; trapezoid area 3, diagonal 0.
  EXPECT_NEAR(qini_auuc(v), 0.75, 1e-12);
  EXPECT_NEAR(oracle::qini(v.score, v.treated, v.y), 0.75, 1e-12);
}

TEST(QiniTest, MatchesBruteForceOnAllArmAssignments) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> level(0, 3);
  std::exponential_distribution<double> expo(0.7);
  for (std::size_t n = 2; n <= 12; ++n) {
    std::vector<double> score(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores so that ties occur.
      score[i] = level(rng);
      y[i] = i % 3 == 0 ? 0.0 : expo(rng);
    }
    const std::uint64_t masks = std::uint64_t{1} << n;
    const std::uint64_t stride = n <= 8 ? 1 : 7;
    for (std::uint64_t mask = 1; mask + 1 < masks; mask += stride) {
      std::vector<std::uint8_t> treated(n);
      for (std::size_t i = 0; i < n; ++i) treated[i] = (mask >> i) & 1U;
      const BinaryEvalView v = make_view(score, treated, y);
      ASSERT_NEAR(qini_auuc(v), oracle::qini(score, treated, y), 1e-12) << "n=" << n;
    }
  }
}

TEST(QiniTest, TiedScoresFollowIndexOrder) {
  const std::vector<double> score(6, 1.0);
  const std::vector<std::uint8_t> treated{0, 1, 1, 0, 1, 0};
  const std::vector<double> y{0.5, 2.0, 0.0, 1.0, 3.0, 0.0};
  EXPECT_NEAR(qini_auuc(make_view(score, treated, y)), oracle::qini(score, treated, y), 1e-12);
}

TEST(QiniTest, SingleArmIsRejected) {
  EXPECT_THROW(qini_auuc(make_view({1, 2}, {1, 1}, {1, 0})), CapabilityError);
  EXPECT_THROW(uplift_curve(make_view({1, 2}, {0, 0}, {1, 0})), CapabilityError);
}

TEST(QiniTest, InvariantToIncreasingScoreTransforms) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  const std::size_t n = 200;
  std::vector<double> score(n), y(n), cubed(n), expd(n);
  std::vector<std::uint8_t> treated(n);
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = normal(rng);
    treated[i] = coin(rng);
    y[i] = std::max(0.0, normal(rng) + treated[i] * score[i]);
    cubed[i] = score[i] * score[i] * score[i] + 5.0;
    expd[i] = std::exp(score[i]);
  }
  const double base = qini_auuc(make_view(score, treated, y));
  EXPECT_NEAR(qini_auuc(make_view(cubed, treated, y)), base, 1e-12);
  EXPECT_NEAR(qini_auuc(make_view(expd, treated, y)), base, 1e-12);
}

TEST(QiniTest, PerfectRankingBeatsReversed) {
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> expo(1.0);
  const std::size_t n = 40;
  std::vector<double> y(n), score(n), reversed(n);
  std::vector<std::uint8_t> treated(n);
  for (std::size_t i = 0; i < n; ++i) {
    treated[i] = i % 2;
    y[i] = treated[i] ? expo(rng) * 3.0 : expo(rng) * 0.2;
    score[i] = treated[i] ? y[i] : -y[i];
    reversed[i] = -score[i];
  }
  EXPECT_GE(qini_auuc(make_view(score, treated, y)),
            qini_auuc(make_view(reversed, treated, y)));
}

TEST(QiniTest, PermutationInvariantWithUniqueScores) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const std::size_t n = 30;
  std::vector<double> score(n), y(n);
  std::vector<std::uint8_t> treated(n);
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = normal(rng);
    treated[i] = i % 3 == 0;
    y[i] = std::abs(normal(rng));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> sp(n), yp(n);
  std::vector<std::uint8_t> tp(n);
  for (std::size_t i = 0; i < n; ++i) {
    sp[i] = score[perm[i]];
    yp[i] = y[perm[i]];
    tp[i] = treated[perm[i]];
  }
  EXPECT_NEAR(qini_auuc(make_view(score, treated, y)), qini_auuc(make_view(sp, tp, yp)),
              1e-12);
  EXPECT_NEAR(pehe(score, y), pehe(sp, yp), 1e-12);
  EXPECT_NEAR(pcoc(y, score), pcoc(yp, sp), 1e-12);
}

TEST(UpliftCurveTest, EndpointsAndArea) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  const std::size_t n = 11;
  std::vector<double> score(n), y(n);
  std::vector<std::uint8_t> treated(n);
  for (std::size_t i = 0; i < n; ++i) {
    score[i] = normal(rng);
    treated[i] = i % 2;
    y[i] = std::abs(normal(rng));
  }
  const BinaryEvalView v = make_view(score, treated, y);
  const std::vector<CurvePoint> curve = uplift_curve(v);
  const std::vector<double> q = oracle::qini_points(score, treated, y);
  ASSERT_EQ(curve.size(), n + 1);
  EXPECT_EQ(curve.front().fraction, 0.0);
  EXPECT_EQ(curve.front().qini, 0.0);
  EXPECT_EQ(curve.back().fraction, 1.0);
  for (std::size_t p = 0; p <= n; ++p) EXPECT_NEAR(curve[p].qini, q[p], 1e-12);
  // Trapezoid in fraction units equals auuc plus the diagonal's area.
  double area = 0.0;
  for (std::size_t p = 1; p <= n; ++p) {
    area += 0.5 * (curve[p - 1].qini + curve[p].qini) * (curve[p].fraction - curve[p - 1].fraction);
  }
  EXPECT_NEAR(area, qini_auuc(v) + 0.5 * curve.back().qini, 1e-12);
}

TEST(MetricPropertyTest, PeheBoundsAteError) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(9), b(9);
    for (std::size_t i = 0; i < 9; ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
    }
    EXPECT_GE(pehe(a, b) + 1e-15, eps_ate(a, b));
  }
}

TEST(MetricPropertyTest, PcocIsHomogeneous) {
  const std::vector<double> y{0.0, 1.5, 3.25, 0.5}, hat{0.3, 1.1, 2.0, 0.9};
  for (double alpha : {0.5, 2.0, 4.0}) {
    std::vector<double> scaled = hat;
    for (double& v : scaled) v *= alpha;
    EXPECT_EQ(pcoc(scaled, y), alpha * pcoc(hat, y));
  }
  std::vector<double> scaled = hat;
  for (double& v : scaled) v *= 1.7;
  EXPECT_NEAR(pcoc(scaled, y), 1.7 * pcoc(hat, y), 1e-14);
}

TEST(HelpersTest, MedianAndColumnMeans) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_THROW(median({}), DimensionError);
  const Tensor2 t(2, 2, std::vector<double>{1, 2, 3, 6});
  EXPECT_EQ(column_means(t), (std::vector<double>{2.0, 4.0}));
}

TEST(BinarizeTest, MedianSplitBalancesArms) {
  DgpConfig c;
  c.n = 301;
  const Dataset d = generate_synthetic(c);
  const CrossFitEnsemble e = untrained_ensemble(d);
  std::vector<double> t0(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) t0[i] = d.t(i, 0);
  const BinaryEvalView v = binarize(d, 0, median(t0), e, 1.0);
  const long treated = static_cast<long>(v.num_treated());
  const long control = static_cast<long>(v.size()) - treated;
  EXPECT_LE(std::abs(treated - control), 1);
  EXPECT_EQ(v.record.t_base, column_means(d.t));
  std::vector<double> to = v.record.t_base;
  to[0] += 1.0;
  EXPECT_EQ(v.score, ensemble_uplift(e, d.x, v.record.t_base, to));
}

TEST(BinarizeTest, ThresholdBelowMinimumTreatsEveryone) {
  DgpConfig c;
  c.n = 50;
  const Dataset d = generate_synthetic(c);
  const CrossFitEnsemble e = untrained_ensemble(d);
  const BinaryEvalView v = binarize(d, 1, -1e9, e, 1.0);
  EXPECT_EQ(v.num_treated(), v.size());
  EXPECT_THROW(qini_auuc(v), CapabilityError);
  EXPECT_THROW(binarize(d, 2, 0.0, e, 1.0), DimensionError);
}

TEST(EvaluateTest, GroundTruthGatesMetrics) {
  DgpConfig c;
  c.n = 120;
  Dataset d = generate_synthetic(c);
  const CrossFitEnsemble e = untrained_ensemble(d);
  const Evaluation with = evaluate(e, d, EvalSettings{});
  EXPECT_TRUE(with.report.pehe && with.report.eps_ate && with.report.eps_att &&
              with.report.policy_risk && with.report.qini_auuc && with.report.pcoc);
  EXPECT_EQ(with.report.n_evaluated, d.size());
  EXPECT_EQ(with.curve.size(), d.size() + 1);

  d.truth.reset();
  const Evaluation without = evaluate(e, d, EvalSettings{});
  EXPECT_FALSE(without.report.pehe || without.report.eps_ate || without.report.eps_att ||
               without.report.policy_risk);
  EXPECT_TRUE(without.report.qini_auuc && without.report.pcoc);
  EXPECT_EQ(*without.report.qini_auuc, *with.report.qini_auuc);
}

TEST(EvaluateTest, SingleArmLeavesRankMetricsAbsent) {
  DgpConfig c;
  c.n = 60;
  const Dataset d = generate_synthetic(c);
  const CrossFitEnsemble e = untrained_ensemble(d);
  EvalSettings s;
  s.threshold = 1e9;
  const Evaluation ev = evaluate(e, d, s);
  EXPECT_FALSE(ev.report.qini_auuc.has_value());
  EXPECT_FALSE(ev.report.eps_att.has_value());
  EXPECT_TRUE(ev.curve.empty());
  EXPECT_TRUE(ev.report.pehe.has_value());
}

}  // namespace
}  // namespace mtdml
