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


#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mtdml/error.hpp"
#include "mtdml/mlp.hpp"
#include "mtdml/tensor.hpp"
#include "oracles.hpp"

namespace mtdml {
namespace {

Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor2 t(rows, cols);
  for (double& v : t.values()) v = normal(rng);
  return t;
}

// Scalar objective sum(output .* r) and its parameter gradient via backward.
double weighted_output(const Mlp& net, const Tensor2& x, const Tensor2& r) {
  const Tensor2 out = net.predict(x);
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * r.values()[i];
  return s;
}

std::vector<double> flat_params(Mlp& net) {
  std::vector<double> out;
  for (auto p : net.parameters()) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void set_params(Mlp& net, const std::vector<double>& theta) {
  std::size_t k = 0;
  for (auto p : net.parameters()) {
    for (double& v : p) v = theta[k++];
  }
}

std::vector<double> flat_grads(Mlp& net) {
  std::vector<double> out;
  for (auto g : net.gradients()) out.insert(out.end(), g.begin(), g.end());
  return out;
}

TEST(TensorTest, MatmulVariantsAgree) {
  std::mt19937_64 rng(1);
  const Tensor2 a = random_tensor(3, 4, rng);
  const Tensor2 b = random_tensor(4, 2, rng);
  const Tensor2 ab = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(ab(i, j), s, 1e-12);
    }
  }
  Tensor2 at(4, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) at(k, i) = a(i, k);
  }
  EXPECT_EQ(matmul_tn(at, b), ab);
  Tensor2 bt(2, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t j = 0; j < 2; ++j) bt(j, k) = b(k, j);
  }
  EXPECT_EQ(matmul_nt(a, bt), ab);
}

TEST(TensorTest, ShapeErrors) {
  EXPECT_THROW(Tensor2(2, 2, std::vector<double>{1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(matmul(Tensor2(2, 3), Tensor2(2, 3)), DimensionError);
  const Tensor2 a(2, 1), b(3, 1);
  const Tensor2* parts[] = {&a, &b};
  EXPECT_THROW(concat_cols(parts), DimensionError);
}

TEST(TensorTest, ConcatSliceGather) {
  const Tensor2 a(2, 2, std::vector<double>{1, 2, 3, 4});
  const Tensor2 b(2, 1, std::vector<double>{5, 6});
  const Tensor2* parts[] = {&a, &b};
  const Tensor2 c = concat_cols(parts);
  EXPECT_EQ(c, Tensor2(2, 3, std::vector<double>{1, 2, 5, 3, 4, 6}));
  EXPECT_EQ(slice_cols(c, 2, 1), b);
  const std::size_t rows[] = {1, 0, 1};
  EXPECT_EQ(gather_rows(a, rows), Tensor2(3, 2, std::vector<double>{3, 4, 1, 2, 3, 4}));
}

TEST(MlpForwardTest, IdentityWeightsReproduceInput) {
  Mlp net(MlpSpec{{3, 3}, {Activation::kIdentity}});
  for (std::size_t i = 0; i < 3; ++i) net.layers()[0].weight(i, i) = 1.0;
  std::mt19937_64 rng(2);
  const Tensor2 x = random_tensor(5, 3, rng);
  EXPECT_EQ(net.predict(x), x);
}

TEST(MlpForwardTest, ZeroWeightsEmitBias) {
  Mlp net(MlpSpec{{3, 2}, {Activation::kIdentity}});
  net.layers()[0].bias = {0.25, -1.5};
  std::mt19937_64 rng(3);
  const Tensor2 out = net.predict(random_tensor(4, 3, rng));
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(out(r, 0), 0.25);
    EXPECT_EQ(out(r, 1), -1.5);
  }
}

TEST(MlpForwardTest, SmallNetMatchesHandArithmetic) {
  // 2 -> 2 (relu) -> 1 (identity).
  Mlp net(MlpSpec{{2, 2, 1}, {Activation::kRelu, Activation::kIdentity}});
  net.layers()[0].weight = Tensor2(2, 2, std::vector<double>{0.5, -1.0, 0.25, 2.0});
  net.layers()[0].bias = {0.1, -0.2};
  net.layers()[1].weight = Tensor2(2, 1, std::vector<double>{1.5, -0.5});
  net.layers()[1].bias = {0.3};
  const Tensor2 x(2, 2, std::vector<double>{1.0, 2.0, -1.0, 0.5});
  // Row 0: h = relu(0.5 + 0.5 + 0.1, -1 + 4 - 0.2) = (1.1, 2.8); y = 1.65 - 1.4 + 0.3.
  // Row 1: h = relu(-0.5 + 0.125 + 0.1, 1 + 1 - 0.2) = (0, 1.8);  y = -0.9 + 0.3.
  const Tensor2 y = net.predict(x);
  EXPECT_NEAR(y(0, 0), 0.55, 1e-12);
  EXPECT_NEAR(y(1, 0), -0.6, 1e-12);
}

TEST(MlpForwardTest, ForwardAgreesWithPredict) {
  std::mt19937_64 rng(4);
  const Mlp net(MlpSpec{{3, 5, 2}, {Activation::kTanh, Activation::kSoftplus}}, rng);
  const Tensor2 x = random_tensor(7, 3, rng);
  const MlpForward f = net.forward(x);
  EXPECT_EQ(f.output, net.predict(x));
  EXPECT_EQ(f.cache.inputs.size(), 2u);
}

TEST(MlpForwardTest, WrongInputWidthThrows) {
  std::mt19937_64 rng(5);
  const Mlp net(MlpSpec{{3, 2}, {Activation::kIdentity}}, rng);
  EXPECT_THROW(net.predict(Tensor2(2, 4)), DimensionError);
}

TEST(MlpSpecTest, ValidateRejectsBadShapes) {
  EXPECT_THROW((MlpSpec{{3}, {}}).validate(), ConfigError);
  EXPECT_THROW((MlpSpec{{3, 0}, {Activation::kRelu}}).validate(), ConfigError);
  EXPECT_THROW((MlpSpec{{3, 2}, {Activation::kRelu, Activation::kRelu}}).validate(),
               ConfigError);
  EXPECT_THROW(activation_from_name("gelu"), ConfigError);
  for (Activation a : {Activation::kRelu, Activation::kTanh, Activation::kIdentity,
                       Activation::kSoftplus}) {
    EXPECT_EQ(activation_from_name(activation_name(a)), a);
  }
}

TEST(MlpBackwardTest, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(6);
  Mlp net(MlpSpec{{3, 4, 2}, {Activation::kTanh, Activation::kIdentity}}, rng);
  const Tensor2 x = random_tensor(5, 3, rng);
  const MlpForward f = net.forward(x);
  net.zero_grad();
  const Tensor2 dx = net.backward(f.cache, Tensor2(5, 2));
  for (double g : flat_grads(net)) EXPECT_EQ(g, 0.0);
  for (double g : dx.values()) EXPECT_EQ(g, 0.0);
}

TEST(MlpBackwardTest, EmptyCacheThrows) {
  std::mt19937_64 rng(7);
  Mlp net(MlpSpec{{3, 2}, {Activation::kIdentity}}, rng);
  EXPECT_THROW(net.backward(MlpCache{}, Tensor2(1, 2)), StateError);
}

class MlpGradientCheck : public ::testing::TestWithParam<Activation> {};

TEST_P(MlpGradientCheck, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    Mlp net(MlpSpec{{3, 4, 2}, {GetParam(), Activation::kIdentity}}, rng);
    const Tensor2 x = random_tensor(6, 3, rng);
    const Tensor2 r = random_tensor(6, 2, rng);
    net.zero_grad();
    const MlpForward f = net.forward(x);
    const Tensor2 dx = net.backward(f.cache, r);
    const std::vector<double> analytic = flat_grads(net);
    const std::vector<double> theta = flat_params(net);
    Mlp probe = net;
    const std::vector<double> numeric = oracle::central_difference(
        [&](const std::vector<double>& p) {
          set_params(probe, p);
          return weighted_output(probe, x, r);
        },
        theta, 1e-5);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      EXPECT_LT(oracle::relative_error(analytic[i], numeric[i], 1e-4), 1e-4)
          << "seed " << seed << " parameter " << i;
    }
    // Input gradient.
    const std::vector<double> x0(x.values().begin(), x.values().end());
    const std::vector<double> numeric_x = oracle::central_difference(
        [&](const std::vector<double>& v) {
          return weighted_output(net, Tensor2(6, 3, v), r);
        },
        x0, 1e-5);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      EXPECT_LT(oracle::relative_error(dx.values()[i], numeric_x[i], 1e-4), 1e-4);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, MlpGradientCheck,
                         ::testing::Values(Activation::kTanh, Activation::kSoftplus,
                                           Activation::kIdentity),
                         [](const auto& info) { return activation_name(info.param); });

TEST(MlpBackwardTest, LinearNetWeightGradientIsClosedForm) {
  // Loss = mean over outputs of y^2 / 2 with y = x W + b: dW = x^T (y / n).
  std::mt19937_64 rng(8);
  Mlp net(MlpSpec{{3, 2}, {Activation::kIdentity}}, rng);
  const Tensor2 x = random_tensor(4, 3, rng);
  const Tensor2 y = net.predict(x);
  Tensor2 d_out = y;
  for (double& v : d_out.values()) v /= static_cast<double>(y.size());
  net.zero_grad();
  net.backward(net.forward(x).cache, d_out);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double expect = 0.0;
      for (std::size_t n = 0; n < 4; ++n) expect += x(n, i) * d_out(n, j);
      EXPECT_NEAR(net.layers()[0].grad_weight(i, j), expect, 1e-12);
    }
  }
}

TEST(MlpBackwardTest, GradientsAccumulateUntilZeroed) {
  std::mt19937_64 rng(9);
  Mlp net(MlpSpec{{2, 3, 1}, {Activation::kTanh, Activation::kIdentity}}, rng);
  const Tensor2 x = random_tensor(3, 2, rng);
  const Tensor2 d(3, 1, 1.0);
  net.zero_grad();
  net.backward(net.forward(x).cache, d);
  const std::vector<double> once = flat_grads(net);
  net.backward(net.forward(x).cache, d);
  const std::vector<double> twice = flat_grads(net);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(twice[i], 2.0 * once[i], 1e-12);
  net.zero_grad();
  for (double g : flat_grads(net)) EXPECT_EQ(g, 0.0);
}

TEST(AdamTest, ZeroGradientLeavesParametersUnchanged) {
  std::mt19937_64 rng(10);
  Mlp net(MlpSpec{{3, 2}, {Activation::kIdentity}}, rng);
  const Mlp before = net;
  AdamState state(net, 0.1);
  net.zero_grad();
  adam_step(net, state);
  EXPECT_TRUE(net == before);
}

TEST(AdamTest, FirstStepOnUnitGradientMovesByLearningRate) {
  Mlp net(MlpSpec{{1, 1}, {Activation::kIdentity}});
  AdamState state(net, 0.1);
  net.layers()[0].grad_weight(0, 0) = 1.0;
  adam_step(net, state);
  // m_hat = 1, v_hat = 1, so the step is -0.1 / (1 + 1e-8).
  EXPECT_NEAR(net.layers()[0].weight(0, 0), -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(net.layers()[0].bias[0], 0.0);
  EXPECT_EQ(state.step(), 1u);
  EXPECT_EQ(net.layers()[0].grad_weight(0, 0), 0.0);
}

TEST(AdamTest, IdenticalNetsStayIdentical) {
  std::mt19937_64 rng_a(11), rng_b(11);
  Mlp a(MlpSpec{{3, 4, 1}, {Activation::kRelu, Activation::kIdentity}}, rng_a);
  Mlp b(MlpSpec{{3, 4, 1}, {Activation::kRelu, Activation::kIdentity}}, rng_b);
  ASSERT_TRUE(a == b);
  AdamState sa(a, 0.01), sb(b, 0.01);
  std::mt19937_64 rng(12);
  const Tensor2 x = random_tensor(5, 3, rng);
  for (int step = 0; step < 3; ++step) {
    a.backward(a.forward(x).cache, Tensor2(5, 1, 0.5));
    b.backward(b.forward(x).cache, Tensor2(5, 1, 0.5));
    adam_step(a, sa);
    adam_step(b, sb);
  }
  EXPECT_TRUE(a == b);
}

TEST(FiniteDiffTest, QuadraticDerivative) {
  const std::vector<double> theta{3.0};
  const std::vector<double> g = finite_diff_grad(
      [](std::span<const double> p) { return p[0] * p[0]; }, theta, 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDiffTest, ConstantFunctionHasZeroGradient) {
  const std::vector<double> theta{1.0, -2.0, 0.5};
  const std::vector<double> g =
      finite_diff_grad([](std::span<const double>) { return 4.0; }, theta, 1e-5);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiffTest, RejectsBadStepAndNonFiniteValues) {
  const std::vector<double> theta{1.0};
  auto f = [](std::span<const double> p) { return p[0]; };
  EXPECT_THROW(finite_diff_grad(f, theta, 0.0), DomainError);
  EXPECT_THROW(finite_diff_grad([](std::span<const double>) { return NAN; }, theta, 1e-5),
               NumericError);
}

TEST(FiniteDiffTest, AgreesWithBackwardOnTinyNet) {
  std::mt19937_64 rng(13);
  Mlp net(MlpSpec{{2, 3, 1}, {Activation::kTanh, Activation::kSoftplus}}, rng);
  const Tensor2 x = random_tensor(4, 2, rng);
  const Tensor2 r = random_tensor(4, 1, rng);
  net.zero_grad();
  net.backward(net.forward(x).cache, r);
  const std::vector<double> analytic = flat_grads(net);
  Mlp probe = net;
  const std::vector<double> theta = flat_params(net);
  const std::vector<double> numeric = finite_diff_grad(
      [&](std::span<const double> p) {
        set_params(probe, std::vector<double>(p.begin(), p.end()));
        return weighted_output(probe, x, r);
      },
      theta, 1e-5);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    EXPECT_LT(oracle::relative_error(analytic[i], numeric[i], 1e-4), 1e-4);
  }
}

TEST(MlpPropertyTest, DeterministicInitAndForward) {
  std::mt19937_64 rng_a(14), rng_b(14);
  const MlpSpec spec{{4, 6, 2}, {Activation::kRelu, Activation::kIdentity}};
  const Mlp a(spec, rng_a), b(spec, rng_b);
  EXPECT_TRUE(a == b);
  std::mt19937_64 rng(15);
  const Tensor2 x = random_tensor(8, 4, rng);
  EXPECT_EQ(a.predict(x), b.predict(x));
}

TEST(MlpPropertyTest, IdentityNetIsAffine) {
  std::mt19937_64 rng(16);
  const Mlp net(MlpSpec{{3, 4, 2}, {Activation::kIdentity, Activation::kIdentity}}, rng);
  const Tensor2 x1 = random_tensor(5, 3, rng);
  const Tensor2 x2 = random_tensor(5, 3, rng);
  const double alpha = 0.7, beta = -1.3;
  Tensor2 mix(5, 3);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    mix.values()[i] = alpha * x1.values()[i] + beta * x2.values()[i];
  }
  const Tensor2 b0 = net.predict(Tensor2(5, 3));
  const Tensor2 y1 = net.predict(x1), y2 = net.predict(x2), ym = net.predict(mix);
  for (std::size_t i = 0; i < ym.size(); ++i) {
    const double expect = alpha * y1.values()[i] + beta * y2.values()[i] -
                          (alpha + beta - 1.0) * b0.values()[i];
    EXPECT_NEAR(ym.values()[i], expect, 1e-12);
  }
}

TEST(MlpPropertyTest, ParameterCountMatchesShapes) {
  std::mt19937_64 rng(17);
  const Mlp net(MlpSpec{{3, 4, 2}, {Activation::kRelu, Activation::kIdentity}}, rng);
  EXPECT_EQ(net.parameter_count(), 3u * 4 + 4 + 4 * 2 + 2);
}

TEST(ActivationTest, SoftplusIsStableAndPositive) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_GE(softplus(-800.0), 0.0);
  EXPECT_LE(softplus(-50.0), 1e-20);
  EXPECT_NEAR(sigmoid(0.0), 0.5, 1e-15);
}

}  // namespace
}  // namespace mtdml
