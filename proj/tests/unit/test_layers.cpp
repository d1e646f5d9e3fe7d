#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "echognn/layers.hpp"
#include "support.hpp"

using namespace echognn;
using namespace testing_support;
using V = Var<double>;
using T = Tensor<double>;

TEST(Conv3d, IdentityKernel) {
  Rng rng(1);
  Conv3d<double> conv(1, 1, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}, rng);
  conv.weight.mutable_value().fill(1.0);
  conv.bias.mutable_value().fill(0.0);
  const T x = rand_tensor({1, 1, 3, 4, 4}, rng);
  EXPECT_EQ(conv.forward(V(x)).value(), x);
}

TEST(Conv3d, OnesKernelCountsNeighbours) {
  Rng rng(1);
  Conv3d<double> conv(1, 1, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng);
  conv.weight.mutable_value().fill(1.0);
  conv.bias.mutable_value().fill(0.0);
  const T y = conv.forward(V(T({1, 1, 4, 4, 4}, 1.0))).value();
  EXPECT_EQ(y[((1 * 4) + 1) * 4 + 1], 27.0);  // interior voxel
  EXPECT_EQ(y[0], 8.0);                       // corner sees 2x2x2
}

TEST(Conv3d, MatchesNaiveLoopOracle) {
  Rng rng(2);
  const T x = rand_tensor({2, 3, 4, 4, 4}, rng);
  Conv3d<double> conv(3, 2, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng);
  const T y = conv.forward(V(x)).value();
  const T ref = naive_conv3d(x, conv.weight.value(),
                             {conv.bias.value().data().begin(), conv.bias.value().data().end()},
                             1, 1, 1, 1, 1, 1);
  ASSERT_EQ(y.shape(), ref.shape());
  EXPECT_LT(max_abs_diff(y, ref), 1e-10);
}

TEST(Property, Conv3dOracleOverRandomShapes) {
  Rng rng(3);
  for (int it = 0; it < 100; ++it) {
    const std::size_t n = rand_int(rng, 1, 2), c = rand_int(rng, 1, 3), o = rand_int(rng, 1, 3);
    const std::size_t t = rand_int(rng, 1, 8), h = rand_int(rng, 1, 8), w = rand_int(rng, 1, 8);
    const ops::Triple k{rand_int(rng, 1, std::min<std::size_t>(3, t)),
                        rand_int(rng, 1, std::min<std::size_t>(3, h)),
                        rand_int(rng, 1, std::min<std::size_t>(3, w))};
    const ops::Triple s{rand_int(rng, 1, 2), rand_int(rng, 1, 2), rand_int(rng, 1, 2)};
    const ops::Triple p{rand_int(rng, 0, k[0] / 2), rand_int(rng, 0, k[1] / 2),
                        rand_int(rng, 0, k[2] / 2)};
    const bool bias = rand_int(rng, 0, 1);
    Conv3d<double> conv(c, o, k, s, p, rng, bias);
    const T x = rand_tensor({n, c, t, h, w}, rng);
    std::vector<double> b;
    if (bias) b.assign(conv.bias.value().data().begin(), conv.bias.value().data().end());
    const T ref = naive_conv3d(x, conv.weight.value(), b, s[0], s[1], s[2], p[0], p[1], p[2]);
    const T y = conv.forward(V(x)).value();
    ASSERT_EQ(y.shape(), ref.shape());
    ASSERT_LT(max_abs_diff(y, ref), 1e-10) << "iteration " << it;
  }
}

TEST(Property, Conv3dPreservesTimeWithCentredPadding) {
  Rng rng(4);
  for (int it = 0; it < 100; ++it) {
    const std::size_t kt = 2 * rand_int(rng, 0, 2) + 1;
    const std::size_t t = rand_int(rng, 1, 8);
    Conv3d<double> conv(1, 2, {kt, 3, 3}, {1, 2, 2}, {(kt - 1) / 2, 1, 1}, rng);
    const T y = conv.forward(V(rand_tensor({1, 1, t, 5, 5}, rng))).value();
    ASSERT_EQ(y.shape()[2], t);
  }
}

TEST(BatchNorm, StandardizedInputPassesThrough) {
  // Columns with mean 0 and population variance 1.
  const T x({4, 2}, std::vector<double>{1, -1, -1, 1, 1, 1, -1, -1});
  BatchNorm<double> bn(2, 0.1, 1e-12);
  EXPECT_LT(max_abs_diff(bn.forward(V(x)).value(), x), 1e-6);
}

TEST(BatchNorm, ConstantChannelGivesBeta) {
  BatchNorm<double> bn(2);
  bn.beta.mutable_value() = T({2}, std::vector<double>{0.25, -0.5});
  const T y = bn.forward(V(T({3, 2}, 7.0))).value();
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(y[2 * i], 0.25);
    EXPECT_EQ(y[2 * i + 1], -0.5);
  }
}

TEST(BatchNorm, EvalReproducesTrainAfterConvergence) {
  Rng rng(5);
  const T x = rand_tensor({6, 3, 2}, rng, -2, 3);
  BatchNorm<double> bn(3);
  T train_out;
  for (int i = 0; i < 100; ++i) train_out = bn.forward(V(x)).value();
  for (double v : bn.running_var.data()) EXPECT_GE(v, 0.0);
  bn.training = false;
  EXPECT_LT(max_abs_diff(bn.forward(V(x)).value(), train_out), 1e-3);
}

TEST(BatchNorm, TrainModeNeedsTwoValues) {
  BatchNorm<double> bn(2);
  EXPECT_THROW(bn.forward(V(T({1, 2}, 1.0))), ContractError);
}

TEST(PositionalEncoding, ClosedForm) {
  const std::size_t frames = 40, d = 8;
  const T pe = positional_encoding<double>(frames, d);
  ASSERT_EQ(pe.shape(), (Shape{frames, d}));
  for (std::size_t i = 0; i < d / 2; ++i) {
    EXPECT_EQ(pe[2 * i], 0.0);
    EXPECT_EQ(pe[2 * i + 1], 1.0);
  }
  EXPECT_NEAR(pe[d], std::sin(1.0), 1e-15);
  EXPECT_NEAR(pe[d], 0.8415, 1e-4);
  for (std::size_t j = 0; j < frames; ++j)
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle = double(j) / std::pow(10000.0, 2.0 * double(i) / double(d));
      EXPECT_NEAR(pe[j * d + 2 * i], std::sin(angle), 1e-12);
      EXPECT_NEAR(pe[j * d + 2 * i + 1], std::cos(angle), 1e-12);
    }
  EXPECT_THROW(positional_encoding<double>(4, 5), ConfigError);
}

TEST(PositionalEncoding, ColumnsRepeatWithTheirWavelength) {
  // Column 0 has wavelength 2*pi: frames j and j + 2*pi*m agree after
  // rounding only approximately, so compare sign patterns over half periods.
  const T pe = positional_encoding<double>(64, 4);
  for (std::size_t j = 0; j < 64; ++j) {
    const double phase = std::fmod(double(j), 2.0 * std::numbers::pi);
    if (std::abs(phase - std::numbers::pi) < 0.05 || phase < 0.05) continue;
    EXPECT_EQ(pe[j * 4] > 0, phase < std::numbers::pi) << j;
  }
}

TEST(Losses, MaeHandValues) {
  EXPECT_EQ(mae_loss(V(T({2}, std::vector<double>{5, 6})), T({2}, std::vector<double>{5, 6}))
                .value()
                .item(),
            0.0);
  EXPECT_EQ(mae_loss(V(T({2, 1}, std::vector<double>{50, 60})), T({2}, std::vector<double>{55, 58}))
                .value()
                .item(),
            3.5);
}

TEST(Losses, MaeSubgradient) {
  V p = V::parameter(T({4}, std::vector<double>{1, 2, 3, 4}));
  backward(mae_loss(p, T({4}, std::vector<double>{0, 2, 5, 4})));
  EXPECT_EQ(p.grad(), T({4}, std::vector<double>{0.25, 0, -0.25, 0}));
}

TEST(Losses, CrossEntropyUniformAndLimit) {
  EXPECT_NEAR(cross_entropy_loss(V(T({1, 4}, 0.0)), {2}).value().item(), std::log(4.0), 1e-15);
  double prev = 1e9;
  for (double margin : {1.0, 5.0, 20.0, 50.0}) {
    const double l =
        cross_entropy_loss(V(T({1, 3}, std::vector<double>{margin, 0, 0})), {0}).value().item();
    EXPECT_LT(l, prev);
    prev = l;
  }
  EXPECT_LT(prev, 1e-20);
}

TEST(Property, CrossEntropyMatchesLogSumExp) {
  Rng rng(6);
  for (int it = 0; it < 100; ++it) {
    const std::size_t n = rand_int(rng, 1, 6), c = rand_int(rng, 2, 6);
    const T z = rand_tensor({n, c}, rng, -30, 30);
    std::vector<int> labels(n);
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = int(rand_int(rng, 0, c - 1));
      rows[i].assign(z.data().begin() + i * c, z.data().begin() + (i + 1) * c);
    }
    ASSERT_NEAR(cross_entropy_loss(V(z), labels).value().item(),
                testing_support::cross_entropy(rows, labels), 1e-9);
  }
}

TEST(EfClasses, BinBoundaries) {
  EXPECT_EQ(ef_to_class(0.0), 0);
  EXPECT_EQ(ef_to_class(30.0), 0);
  EXPECT_EQ(ef_to_class(30.0001), 1);
  EXPECT_EQ(ef_to_class(40.0), 1);
  EXPECT_EQ(ef_to_class(40.0001), 2);
  EXPECT_EQ(ef_to_class(55.0), 2);
  EXPECT_EQ(ef_to_class(56.0), 3);
  EXPECT_EQ(ef_to_class(100.0), 3);
}

TEST(ParameterCount, UnitCases) {
  Rng rng(7);
  ParamList<double> p;
  Linear<double>(3, 2, rng).collect("fc", p);
  EXPECT_EQ(count_parameters(p), 8u);
  ParamList<double> q;
  MlpBlock<double>(4, 8, 2, rng).collect("mlp", q);
  EXPECT_EQ(count_parameters(q), 74u);
  ParamList<double> r;
  Conv3d<double>(2, 3, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng, false).collect("conv", r);
  EXPECT_EQ(count_parameters(r), 162u);
}

TEST(Init, UniformWithinFanInBound) {
  Rng rng(8);
  const T w = init_uniform<double>({50, 16}, 16, rng);
  for (double v : w.data()) EXPECT_LE(std::abs(v), 0.25);
}
