// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <random>

#include "drumsep/model/unet.hpp"
#include "drumsep/nn/activation.hpp"
#include "drumsep/nn/adam.hpp"
#include "drumsep/nn/conv.hpp"
#include "drumsep/nn/freq_batchnorm.hpp"
#include "drumsep/nn/loss.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace drumsep;
using namespace drumsep::nn;

namespace {

Tensor4<double> random_tensor(Shape4 s, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  Tensor4<double> t(s);
  fill_uniform<double>(t.span(), lo, hi, rng);
  return t;
}

oracle::Arr4 to_arr(const Tensor4<double>& t) {
  const auto& s = t.shape();
  oracle::Arr4 a(int(s.n), int(s.c), int(s.h), int(s.w));
  a.v = t.vec();
  return a;
}

ConvParams<double> random_params(index_t in_c, const ConvSpec& spec, std::mt19937_64& rng) {
  auto p = make_conv_params<double>("l", in_c, spec, rng);
  fill_uniform<double>(p.bias.value, -0.5, 0.5, rng);
  return p;
}

// Upstream-weighted sum used as a scalar loss for gradient checks.
double project(const Tensor4<double>& y, const Tensor4<double>& r) { return dot(y, r); }

}  // namespace

// ---------------------------------------------------------------- conv2d

TEST(Conv2d, OneByOneIdentity) {
  std::mt19937_64 rng(1);
  const auto x = random_tensor({2, 3, 5, 4}, rng);
  ConvSpec spec{3, {1, 1}, {1, 1}, {0, 0}};
  ConvParams<double> p{Param<double>("w", {3, 3, 1, 1}), Param<double>("b", {3})};
  for (int i = 0; i < 3; ++i) p.weight.value[i * 3 + i] = 1.0;
  EXPECT_EQ(conv_forward(x, spec, p), x);
}

TEST(Conv2d, ZeroWeightsGiveZeroOutput) {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({1, 2, 8, 8}, rng);
  ConvSpec spec{4};
  ConvParams<double> p{Param<double>("w", spec.weight_shape(2)), Param<double>("b", {4})};
  const auto y = conv_forward(x, spec, p);
  EXPECT_EQ(y.shape(), (Shape4{1, 4, 4, 4}));
  for (auto v : y.vec()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(3);
  const auto x = random_tensor({1, 1, 6, 6}, rng);
  ConvSpec spec{2, {3, 3}, {2, 2}, {1, 1}};
  const auto p = random_params(1, spec, rng);
  const auto y = conv_forward(x, spec, p);
  const auto ref = oracle::naive_conv(to_arr(x), p.weight.value, p.bias.value, 2, 3, 3, 2, 2, 1, 1, 1, 1);
  ASSERT_EQ(y.shape(), (Shape4{1, 2, ref.H, ref.W}));
  for (index_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], ref.v[i], 1e-12);
}

TEST(Conv2d, MatchesOracleWithDilationAndAsymmetry) {
  std::mt19937_64 rng(4);
  const auto x = random_tensor({2, 3, 9, 7}, rng);
  ConvSpec spec{4, {3, 2}, {1, 2}, {2, 1}, {2, 1}};
  const auto p = random_params(3, spec, rng);
  const auto y = conv_forward(x, spec, p);
  const auto ref = oracle::naive_conv(to_arr(x), p.weight.value, p.bias.value, 4, 3, 2, 1, 2, 2, 1, 2, 1);
  ASSERT_EQ(y.numel(), index_t(ref.v.size()));
  for (index_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], ref.v[i], 1e-12);
}

TEST(Conv2d, ShapeErrorNamesBothShapes) {
  std::mt19937_64 rng(5);
  const auto x = random_tensor({1, 3, 8, 8}, rng);
  ConvSpec spec{4};
  auto p = make_conv_params<double>("l", 2, spec, rng);
  try {
    conv_forward(x, spec, p);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("(4, 2, 5, 5)"), std::string::npos) << m;
    EXPECT_NE(m.find("(1, 3, 8, 8)"), std::string::npos) << m;
  }
  // kernel larger than the padded input
  ConvSpec big{1, {9, 9}, {1, 1}, {0, 0}};
  auto pb = make_conv_params<double>("l", 3, big, rng);
  EXPECT_THROW(conv_forward(x, big, pb), ShapeError);
}

// ------------------------------------------------------- conv_transpose2d

TEST(ConvTranspose2d, IsTheAdjointOfConv) {
  std::mt19937_64 rng(6);
  const std::vector<ConvSpec> specs = {
      {3, {5, 5}, {2, 2}, {2, 2}, {1, 1}},
      {2, {4, 4}, {1, 1}, {3, 3}, {2, 2}},
      {3, {3, 2}, {2, 1}, {1, 0}, {1, 2}},
  };
  for (const auto& cs : specs) {
    const index_t in_c = 2;
    const auto x = random_tensor({2, in_c, 12, 10}, rng);
    auto p = random_params(in_c, cs, rng);
    p.bias.value.assign(p.bias.value.size(), 0.0);
    const auto y = conv_forward(x, cs, p);
    const auto r = random_tensor(y.shape(), rng);
    // transposed spec sharing the weights: (in=out_c, out=in_c)
    ConvSpec ts = cs;
    ts.transposed = true;
    ts.out_channels = in_c;
    ConvParams<double> tp{p.weight, Param<double>("b", {in_c})};
    // conv output sizes may have dropped rows; output_padding restores them
    for (int a = 0; a < 2; ++a) {
      const index_t want = a == 0 ? 12 : 10;
      ts.output_padding[a] = want - ts.out_dim(a, a == 0 ? y.shape().h : y.shape().w) + ts.output_padding[a];
    }
    const auto xt = conv_forward(r, ts, tp);
    ASSERT_EQ(xt.shape(), x.shape());
    EXPECT_NEAR(dot(y, r), dot(x, xt), 1e-10 * (1 + std::abs(dot(y, r))));
  }
}

TEST(ConvTranspose2d, ZeroInputGivesBias) {
  ConvSpec spec{3, {5, 5}, {2, 2}, {2, 2}, {1, 1}, {1, 1}, true};
  std::mt19937_64 rng(7);
  auto p = random_params(4, spec, rng);
  const auto y = conv_forward(Tensor4<double>(1, 4, 3, 5), spec, p);
  EXPECT_EQ(y.shape(), (Shape4{1, 3, 6, 10}));
  for (index_t c = 0; c < 3; ++c)
    for (index_t h = 0; h < 6; ++h)
      for (index_t w = 0; w < 10; ++w) EXPECT_EQ(y(0, c, h, w), p.bias.value[c]);
}

TEST(ConvTranspose2d, MatchesScatterAddOracle) {
  std::mt19937_64 rng(8);
  const std::vector<ConvSpec> specs = {
      {2, {5, 5}, {2, 2}, {2, 2}, {1, 1}, {1, 1}, true},
      {2, {4, 4}, {1, 1}, {3, 3}, {2, 2}, {0, 0}, true},
      {3, {3, 2}, {2, 3}, {1, 0}, {1, 1}, {0, 2}, true},
  };
  for (const auto& spec : specs) {
    const auto x = random_tensor({2, 3, 4, 5}, rng);
    const auto p = random_params(3, spec, rng);
    const auto y = conv_forward(x, spec, p);
    const auto ref = oracle::naive_conv_transpose(
        to_arr(x), p.weight.value, p.bias.value, int(spec.out_channels), int(spec.kernel[0]),
        int(spec.kernel[1]), int(spec.stride[0]), int(spec.stride[1]), int(spec.padding[0]),
        int(spec.padding[1]), int(spec.dilation[0]), int(spec.dilation[1]),
        int(spec.output_padding[0]), int(spec.output_padding[1]));
    ASSERT_EQ(y.shape(), (Shape4{2, spec.out_channels, ref.H, ref.W}));
    for (index_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], ref.v[i], 1e-12);
  }
}

TEST(ConvTranspose2d, FinalLayerPreservesShape) {
  ConvSpec spec{2, {4, 4}, {1, 1}, {3, 3}, {2, 2}, {0, 0}, true};
  EXPECT_EQ(spec.out_dim(0, 256), 256);
  EXPECT_EQ(spec.out_dim(1, 128), 128);
  ConvSpec up{8, {5, 5}, {2, 2}, {2, 2}, {1, 1}, {1, 1}, true};
  EXPECT_EQ(up.out_dim(0, 4), 8);
  ConvSpec down{8};
  EXPECT_EQ(down.out_dim(0, 8), 4);
}

// ---------------------------------------------------------------- FreqBN

TEST(FreqBN, ConstantBandsNormalizeToZero) {
  FreqBatchNorm<double> bn("bn", 4);
  Tensor4<double> x(2, 2, 4, 8);
  for (index_t n = 0; n < 2; ++n)
    for (index_t c = 0; c < 2; ++c)
      for (index_t f = 0; f < 4; ++f)
        for (index_t t = 0; t < 8; ++t) x(n, c, f, t) = 0.25 * f + 3.0;
  const auto y = bn.forward(x, Mode::Train);
  for (auto v : y.vec()) EXPECT_NEAR(v, 0.0, 1e-9);
  for (auto v : y.vec()) EXPECT_TRUE(std::isfinite(v));
}

TEST(FreqBN, TrainModeStandardizesEachBand) {
  std::mt19937_64 rng(9);
  FreqBatchNorm<double> bn("bn", 6);
  auto x = random_tensor({3, 2, 6, 10}, rng, 0, 5);
  for (index_t i = 0; i < x.numel(); ++i) x[i] *= 1 + (i % 7);
  const auto y = bn.forward(x, Mode::Train);
  for (index_t f = 0; f < 6; ++f) {
    double m = 0, v = 0;
    const double n = 3 * 2 * 10;
    for (index_t a = 0; a < 3; ++a)
      for (index_t c = 0; c < 2; ++c)
        for (index_t t = 0; t < 10; ++t) m += y(a, c, f, t);
    m /= n;
    for (index_t a = 0; a < 3; ++a)
      for (index_t c = 0; c < 2; ++c)
        for (index_t t = 0; t < 10; ++t) v += (y(a, c, f, t) - m) * (y(a, c, f, t) - m);
    v /= n;
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-6 + 1e-5);  // variance floor shifts it by ~eps/var
  }
}

TEST(FreqBN, GammaBetaScaleAndShift) {
  std::mt19937_64 rng(10);
  FreqBatchNorm<double> bn("bn", 3);
  bn.gamma.value.assign(3, 2.0);
  bn.beta.value.assign(3, 3.0);
  const auto x = random_tensor({4, 2, 3, 16}, rng, -2, 7);
  const auto y = bn.forward(x, Mode::Train);
  for (index_t f = 0; f < 3; ++f) {
    std::vector<double> vals;
    for (index_t a = 0; a < 4; ++a)
      for (index_t c = 0; c < 2; ++c)
        for (index_t t = 0; t < 16; ++t) vals.push_back(y(a, c, f, t));
    double m = 0;
    for (double v : vals) m += v;
    m /= vals.size();
    double var = 0;
    for (double v : vals) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / vals.size());
    EXPECT_NEAR(m, 3.0, 1e-6);
    EXPECT_NEAR(sd, 2.0, 1e-4);  // floor eps=1e-5 against variance ~7
  }
}

TEST(FreqBN, EvalModeUsesRunningStatistics) {
  FreqBatchNorm<double> bn("bn", 2);
  bn.running_mean.value = {1.0, -1.0};
  bn.running_var.value = {4.0, 0.25};
  Tensor4<double> x(1, 1, 2, 1);
  x(0, 0, 0, 0) = 5.0;
  x(0, 0, 1, 0) = 0.0;
  const auto y = bn.forward(x, Mode::Eval);
  EXPECT_NEAR(y(0, 0, 0, 0), 4.0 / std::sqrt(4.0 + 1e-5), 1e-12);
  EXPECT_NEAR(y(0, 0, 1, 0), 1.0 / std::sqrt(0.25 + 1e-5), 1e-12);
  // applying it twice composes as a fixed affine map per band
  const auto yy = bn.forward(y, Mode::Eval);
  EXPECT_NEAR(yy(0, 0, 0, 0), (y(0, 0, 0, 0) - 1.0) / std::sqrt(4.0 + 1e-5), 1e-12);
}

TEST(FreqBN, RunningStatsMomentum) {
  FreqBatchNorm<double> bn("bn", 1);
  Tensor4<double> x(1, 1, 1, 4);
  x[0] = 1, x[1] = 2, x[2] = 3, x[3] = 6;  // mean 3, unbiased var 14/3
  bn.forward(x, Mode::Train);
  EXPECT_NEAR(bn.running_mean.value[0], 0.3, 1e-12);
  EXPECT_NEAR(bn.running_var.value[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-12);
}

TEST(FreqBN, ShapeAndStateErrors) {
  FreqBatchNorm<double> bn("bn", 5);
  EXPECT_THROW(bn.backward(Tensor4<double>(1, 1, 5, 1)), StateError);
  EXPECT_THROW(bn.forward(Tensor4<double>(1, 1, 4, 1), Mode::Train), ShapeError);
}

// ------------------------------------------------------------ activations

TEST(Activation, ReferenceValues) {
  EXPECT_EQ(activate(ActKind::Sigmoid, 0.0), 0.5);
  EXPECT_EQ(activate(ActKind::Relu, -3.0), 0.0);
  EXPECT_EQ(activate(ActKind::Relu, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(activate(ActKind::LeakyRelu, -1.0), -0.2);
  EXPECT_DOUBLE_EQ(activate(ActKind::Tanh, 0.5), std::tanh(0.5));
  for (double x : {-800.0, -30.0, 30.0, 800.0}) {
    const double s = activate(ActKind::Sigmoid, x);
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_GT(activate(ActKind::Sigmoid, -30.0), 0.0);
  EXPECT_LT(activate(ActKind::Sigmoid, 30.0f), 1.0f + 1e-7f);
}

TEST(Activation, BackwardBeforeForwardIsAStateError) {
  Activation<double> a(ActKind::Relu);
  EXPECT_THROW(a.backward(Tensor4<double>(1, 1, 1, 1)), StateError);
}

// ------------------------------------------------------------- L1 loss

TEST(MaskedL1, ValuesAndZeroSubgradient) {
  Tensor4<double> m(1, 1, 1, 3, 0.5), x(1, 1, 1, 3, 2.0), t(1, 1, 1, 3);
  t[0] = 1.0;  // zero residual
  t[1] = 0.0;
  t[2] = 3.0;
  Tensor4<double> g;
  EXPECT_DOUBLE_EQ(masked_l1(m, x, t, &g), 0.0 + 1.0 + 2.0);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 2.0);
  EXPECT_EQ(g[2], -2.0);
}

TEST(MaskedL1, ZeroMixtureGivesTargetNorm) {
  std::mt19937_64 rng(11);
  const auto m = random_tensor({1, 2, 4, 4}, rng, 0, 1);
  const auto t = random_tensor({1, 2, 4, 4}, rng, 0, 3);
  double norm = 0;
  for (auto v : t.vec()) norm += std::abs(v);
  EXPECT_DOUBLE_EQ(masked_l1(m, Tensor4<double>(m.shape()), t), norm);
}

// ------------------------------------------------------- gradient checks

namespace {

constexpr double kTol = 1e-4;

void check_conv_gradients(const ConvSpec& spec, Shape4 in_shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto x = random_tensor(in_shape, rng);
  auto p = random_params(in_shape.c, spec, rng);
  const auto y0 = conv_forward(x, spec, p);
  const auto r = random_tensor(y0.shape(), rng);

  p.weight.zero_grad();
  p.bias.zero_grad();
  const auto dx = conv_backward(x, r, spec, p);
  auto loss = [&] { return project(conv_forward(x, spec, p), r); };

  auto num_x = gradcheck::numeric(x.vec(), loss);
  EXPECT_LT(gradcheck::relative_error(dx.vec(), num_x), kTol) << "input, seed " << seed;
  const auto gw = p.weight.grad, gb = p.bias.grad;
  EXPECT_LT(gradcheck::relative_error(gw, gradcheck::numeric(p.weight.value, loss)), kTol)
      << "weight, seed " << seed;
  EXPECT_LT(gradcheck::relative_error(gb, gradcheck::numeric(p.bias.value, loss)), kTol)
      << "bias, seed " << seed;
}

}  // namespace

TEST(GradCheck, Conv2d) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    check_conv_gradients({3, {5, 5}, {2, 2}, {2, 2}}, {2, 2, 8, 6}, 100 + s);
    check_conv_gradients({2, {3, 3}, {1, 2}, {1, 0}, {2, 1}}, {1, 3, 7, 7}, 200 + s);
  }
}

TEST(GradCheck, ConvTranspose2d) {
  for (std::uint64_t s = 0; s < 5; ++s)
    check_conv_gradients({3, {5, 5}, {2, 2}, {2, 2}, {1, 1}, {1, 1}, true}, {2, 2, 4, 3}, 300 + s);
}

TEST(GradCheck, FinalDilatedTransposedLayer) {
  for (std::uint64_t s = 0; s < 5; ++s)
    check_conv_gradients({2, {4, 4}, {1, 1}, {3, 3}, {2, 2}, {0, 0}, true}, {2, 3, 6, 5}, 400 + s);
}

TEST(GradCheck, FreqBatchNormTrainAndEval) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    std::mt19937_64 rng(500 + s);
    FreqBatchNorm<double> bn("bn", 4);
    fill_uniform<double>(bn.gamma.value, 0.5, 2.0, rng);
    fill_uniform<double>(bn.beta.value, -1.0, 1.0, rng);
    auto x = random_tensor({2, 2, 4, 5}, rng, -1, 3);
    const auto r = random_tensor(x.shape(), rng);
    for (Mode mode : {Mode::Train, Mode::Eval}) {
      bn.running_mean.value = {0.1, 0.2, -0.3, 0.0};
      bn.running_var.value = {1.5, 0.7, 2.0, 1.0};
      auto fwd = [&] {
        const auto keep_m = bn.running_mean.value, keep_v = bn.running_var.value;
        const double l = project(bn.forward(x, mode), r);
        bn.running_mean.value = keep_m;
        bn.running_var.value = keep_v;
        return l;
      };
      fwd();
      bn.gamma.zero_grad();
      bn.beta.zero_grad();
      const auto dx = bn.backward(r);
      const auto gg = bn.gamma.grad, gb = bn.beta.grad;
      EXPECT_LT(gradcheck::relative_error(dx.vec(), gradcheck::numeric(x.vec(), fwd)), kTol);
      EXPECT_LT(gradcheck::relative_error(gg, gradcheck::numeric(bn.gamma.value, fwd)), kTol);
      EXPECT_LT(gradcheck::relative_error(gb, gradcheck::numeric(bn.beta.value, fwd)), kTol);
    }
  }
}

TEST(GradCheck, Activations) {
  for (ActKind k : {ActKind::LeakyRelu, ActKind::Relu, ActKind::Sigmoid, ActKind::Tanh})
    for (std::uint64_t s = 0; s < 5; ++s) {
      std::mt19937_64 rng(600 + s);
      auto x = random_tensor({1, 2, 3, 4}, rng, -3, 3);
      const auto r = random_tensor(x.shape(), rng);
      Activation<double> a(k);
      a.forward(x);
      const auto dx = a.backward(r);
      auto loss = [&] { return project(activation(x, k), r); };
      EXPECT_LT(gradcheck::relative_error(dx.vec(), gradcheck::numeric(x.vec(), loss)), kTol);
    }
}

TEST(GradCheck, MaskedL1) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    std::mt19937_64 rng(700 + s);
    auto m = random_tensor({1, 2, 4, 4}, rng, 0, 1);
    const auto x = random_tensor(m.shape(), rng, 0, 2);
    const auto t = random_tensor(m.shape(), rng, 0, 1);
    Tensor4<double> g;
    masked_l1(m, x, t, &g);
    auto loss = [&] { return masked_l1(m, x, t); };
    EXPECT_LT(gradcheck::relative_error(g.vec(), gradcheck::numeric(m.vec(), loss)), kTol);
  }
}

TEST(GradCheck, ConvFreqBnLeakyChain) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    std::mt19937_64 rng(800 + s);
    ConvSpec spec{3, {5, 5}, {2, 2}, {2, 2}};
    auto x = random_tensor({2, 2, 8, 8}, rng);
    auto p = random_params(2, spec, rng);
    FreqBatchNorm<double> bn("bn", 4);
    fill_uniform<double>(bn.gamma.value, 0.5, 1.5, rng);
    Activation<double> act(ActKind::LeakyRelu);
    const auto r = random_tensor({2, 3, 4, 4}, rng);
    auto loss = [&] { return project(activation(bn.forward(conv_forward(x, spec, p), Mode::Train), ActKind::LeakyRelu), r); };
    const auto y = conv_forward(x, spec, p);
    act.forward(bn.forward(y, Mode::Train));
    p.weight.zero_grad();
    p.bias.zero_grad();
    bn.gamma.zero_grad();
    const auto dx = conv_backward(x, bn.backward(act.backward(r)), spec, p);
    const auto gw = p.weight.grad, gg = bn.gamma.grad;
    EXPECT_LT(gradcheck::relative_error(dx.vec(), gradcheck::numeric(x.vec(), loss)), kTol);
    EXPECT_LT(gradcheck::relative_error(gw, gradcheck::numeric(p.weight.value, loss)), kTol);
    EXPECT_LT(gradcheck::relative_error(gg, gradcheck::numeric(bn.gamma.value, loss)), kTol);
  }
}

// ------------------------------------------------------------------ Adam

TEST(Adam, ZeroGradientLeavesParametersButCountsTheStep) {
  Param<double> p("p", {3}, 1.5);
  AdamState<double> st;
  adam_step<double>({&p}, st);
  EXPECT_EQ(st.step, 1);
  for (double v : p.value) EXPECT_EQ(v, 1.5);
}

TEST(Adam, FirstStepFormula) {
  Param<double> p("p", {3});
  p.grad = {0.3, -2.0, 1e-3};
  AdamState<double> st;
  adam_step<double>({&p}, st);
  for (int i = 0; i < 3; ++i) {
    const double g = p.grad[i];
    EXPECT_NEAR(p.value[i], -1e-4 * g / (std::abs(g) + 1e-8), 1e-10);
  }
}

TEST(Adam, ConstantGradientApproachesLearningRateSteps) {
  Param<double> p("p", {1});
  AdamState<double> st;
  st.lr = 1e-3;
  double prev = 0;
  for (int k = 0; k < 2000; ++k) {
    p.grad = {-0.7};
    adam_step<double>({&p}, st);
    const double step = p.value[0] - prev;
    prev = p.value[0];
    if (k > 1000) EXPECT_NEAR(step, 1e-3, 1e-6);
  }
}

TEST(Adam, NonFiniteGradientFailsFastWithoutUpdating) {
  Param<double> p("weights", {2}, 1.0);
  p.grad = {0.5, std::numeric_limits<double>::quiet_NaN()};
  AdamState<double> st;
  EXPECT_THROW(adam_step<double>({&p}, st), NumericError);
  EXPECT_EQ(p.value[0], 1.0);
  EXPECT_EQ(st.step, 0);
}

// ------------------------------------------------------------------ U-Net

TEST(UNet, HasThirteenLayersWithMirroredShapes) {
  const auto cfg = model::UNetConfig::desk();
  const auto specs = cfg.layer_specs();
  ASSERT_EQ(specs.size(), 13u);
  EXPECT_EQ(specs[12].kernel, (std::array<index_t, 2>{4, 4}));
  EXPECT_EQ(specs[12].dilation, (std::array<index_t, 2>{2, 2}));
  EXPECT_EQ(specs[12].padding, (std::array<index_t, 2>{3, 3}));
  for (int l = 0; l < 12; ++l) {
    EXPECT_EQ(specs[l].kernel, (std::array<index_t, 2>{5, 5}));
    EXPECT_EQ(specs[l].stride, (std::array<index_t, 2>{2, 2}));
    EXPECT_EQ(specs[l].padding, (std::array<index_t, 2>{2, 2}));
  }
  EXPECT_THROW((model::UNetConfig{100, 128}.validate()), ConfigError);
}

TEST(UNet, ForwardShapeRangeAndDeterminism) {
  model::UNetConfig cfg{64, 64, 2, {2, 3, 4, 4, 5, 5}, true};
  model::UNet<float> net(cfg, 42);
  std::mt19937_64 rng(1);
  Tensor4<float> x(2, 2, 64, 64);
  fill_uniform<float>(x.span(), 0, 4, rng);
  const auto m1 = net.infer(x);
  const auto m2 = net.infer(x);
  EXPECT_EQ(m1, m2);
  EXPECT_EQ(m1.shape(), x.shape());
  // float sigmoid may round to the closed interval
  for (auto v : m1.vec()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  model::UNet<double> netd(cfg, 42);
  for (auto v : netd.forward(x.cast<double>(), Mode::Train).vec()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  const auto z = net.infer(Tensor4<float>(1, 2, 64, 64));
  for (auto v : z.vec()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(net.infer(Tensor4<float>(1, 2, 64, 128)), ShapeError);
  model::UNet<float> fresh(cfg, 42);
  EXPECT_THROW(fresh.backward(m1), StateError);
}

TEST(UNet, RecordingForwardMatchesInferInEvalMode) {
  model::UNetConfig cfg{64, 64, 2, {2, 2, 3, 3, 4, 4}, true};
  model::UNet<double> net(cfg, 3);
  std::mt19937_64 rng(2);
  const auto x = random_tensor({1, 2, 64, 64}, rng, 0, 2);
  const auto a = net.forward(x, Mode::Eval);
  const auto b = net.infer(x);
  for (index_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-14);
}

TEST(GradCheck, WholeUNet) {
  model::UNetConfig cfg{64, 64, 2, {2, 2, 2, 3, 3, 3}, true};
  model::UNet<double> net(cfg, 9);
  std::mt19937_64 rng(10);
  auto x = random_tensor({2, 2, 64, 64}, rng, 0, 2);
  const auto r = random_tensor(x.shape(), rng);
  auto loss = [&] { return project(net.forward(x, Mode::Train), r); };
  loss();
  net.zero_grad();
  const auto dx = net.backward(r);

  // finite differences on a random subset of coordinates
  auto check_subset = [&](std::vector<double>& vals, const std::vector<double>& analytic,
                          const std::string& what) {
    std::vector<std::size_t> idx(vals.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), 40));
    std::vector<double> a, n;
    for (auto i : idx) {
      const double keep = vals[i];
      vals[i] = keep + 1e-5;
      const double lp = loss();
      vals[i] = keep - 1e-5;
      const double lm = loss();
      vals[i] = keep;
      a.push_back(analytic[i]);
      n.push_back((lp - lm) / 2e-5);
    }
    EXPECT_LT(gradcheck::relative_error(a, n), kTol) << what;
  };
  check_subset(x.vec(), dx.vec(), "input");
  for (auto* p : net.params()) {
    const auto g = p->grad;
    check_subset(p->value, g, p->name);
  }
}
