#include <gtest/gtest.h>

#include <cmath>

#include "echognn/gradcheck.hpp"
#include "echognn/gradsuite.hpp"
#include "echognn/ops.hpp"
#include "support.hpp"

using namespace echognn;
using testing_support::rand_int;
using testing_support::rand_tensor;
using V = Var<double>;
using T = Tensor<double>;

TEST(Tensor, ShapeMismatchThrows) {
  EXPECT_THROW(T({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(T({2}).item(), ShapeError);
  EXPECT_EQ(T::scalar(3.0).item(), 3.0);
}

TEST(Ops, MatmulShape) {
  V a(T({2, 3}, 1.0)), b(T({3, 1}, 2.0));
  const V c = ops::matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c.value()[0], 6.0);
  EXPECT_THROW(ops::matmul(a, a), ShapeError);
}

TEST(Ops, ScalarClosedForms) {
  EXPECT_EQ(ops::sigmoid(V(T::scalar(0.0))).value().item(), 0.5);
  const double e = ops::elu(V(T::scalar(-1.0)), 1.0).value().item();
  EXPECT_NEAR(e, std::exp(-1.0) - 1.0, 1e-15);
  EXPECT_NEAR(e, -0.6321, 1e-4);
}

TEST(Ops, NonFiniteResultThrows) {
  EXPECT_THROW(ops::log(V(T({2}, -1.0))), NumericError);
  EXPECT_THROW(ops::div(V(T({1}, 1.0)), V(T({1}, 0.0))), NumericError);
}

TEST(Autograd, SumGivesOnes) {
  testing_support::Rng rng(1);
  V x = V::parameter(rand_tensor({2, 3, 4}, rng));
  backward(ops::sum(x));
  for (double g : x.grad().data()) EXPECT_EQ(g, 1.0);
}

TEST(Autograd, SquareGradient) {
  V x = V::parameter(T({3}, std::vector<double>{1, 2, 3}));
  backward(ops::sum(ops::mul(x, x)));
  EXPECT_EQ(x.grad(), T({3}, std::vector<double>{2, 4, 6}));
}

TEST(Autograd, ReusedNodeAccumulates) {
  V x = V::parameter(T({2}, std::vector<double>{1, -2}));
  V y = ops::scale(x, 3.0);
  backward(ops::sum(ops::add(y, y)));
  EXPECT_EQ(x.grad(), T({2}, 6.0));
}

TEST(Autograd, ContractViolations) {
  V x = V::parameter(T({2}, 1.0));
  EXPECT_THROW(backward(ops::scale(x, 2.0)), ContractError);  // not a scalar
  V loss = ops::sum(x);
  backward(loss);
  EXPECT_THROW(backward(loss), ContractError);
}

TEST(Autograd, AbsSubgradientAtZero) {
  V x = V::parameter(T({3}, std::vector<double>{-2, 0, 2}));
  backward(ops::sum(ops::abs(x)));
  EXPECT_EQ(x.grad(), T({3}, std::vector<double>{-1, 0, 1}));
}

TEST(Autograd, EluDerivativeAtZeroIsOne) {
  V x = V::parameter(T({1}, 0.0));
  backward(ops::sum(ops::elu(x, 1.0)));
  EXPECT_EQ(x.grad()[0], 1.0);
}

TEST(Autograd, ConstantsGetNoGraph) {
  V c(T({2}, 1.0));
  V y = ops::mul(c, c);
  EXPECT_FALSE(y.requires_grad());
}

TEST(GradCheck, SigmoidSum) {
  testing_support::Rng rng(2);
  V x = V::parameter(rand_tensor({4, 5}, rng, -3, 3));
  const auto r = finite_difference_check<double>([&] { return ops::sum(ops::sigmoid(x)); }, {x});
  EXPECT_TRUE(r.passed()) << r.max_rel_error;
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, ConstantDirectionIsZeroBothWays) {
  V x = V::parameter(T({2}, 1.0));
  V unused = V::parameter(T({3}, 0.5));
  const auto r = finite_difference_check<double>([&] { return ops::sum(ops::exp(x)); },
                                                 {x, unused});
  EXPECT_TRUE(r.passed());
  for (double g : unused.grad().data()) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(r.params[1].max_abs_error, 0.0);
}

TEST(GradCheck, DetectsWrongGradient) {
  // A rule that doubles the true gradient must be caught.
  V x = V::parameter(T({3}, std::vector<double>{0.3, -0.2, 0.9}));
  auto f = [&] {
    V y = make_result<double>(x.value(), "broken", {x}, [](Node<double>& n) {
      T g = n.grad;
      for (auto& v : g.storage()) v *= 2.0;
      n.parents[0]->accumulate(g);
    });
    return ops::sum(y);
  };
  EXPECT_FALSE(finite_difference_check<double>(f, {x}).passed());
}

TEST(GradSuite, EveryRegisteredOpPasses) {
  const auto r = op_gradient_suite(11, 5);
  EXPECT_EQ(r.entries.size(), ops::registered_ops().size() * 5);
  for (const auto& e : r.entries) EXPECT_TRUE(e.report.passed()) << e.label << " " << e.report.max_rel_error;
}

// Broadcast add against a per-element oracle over random shapes.
TEST(Property, BroadcastAddMatchesIndexing) {
  testing_support::Rng rng(3);
  for (int it = 0; it < 100; ++it) {
    const std::size_t a = rand_int(rng, 1, 3), b = rand_int(rng, 1, 4), c = rand_int(rng, 1, 3);
    const T x = rand_tensor({a, b, c}, rng);
    const T y = rand_tensor({b, 1}, rng);
    const T z = ops::add(V(x), V(y)).value();
    ASSERT_EQ(z.shape(), (Shape{a, b, c}));
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < b; ++j)
        for (std::size_t k = 0; k < c; ++k)
          ASSERT_EQ(z[(i * b + j) * c + k], x[(i * b + j) * c + k] + y[j]);
  }
}

TEST(Property, MatmulMatchesLoops) {
  testing_support::Rng rng(4);
  for (int it = 0; it < 100; ++it) {
    const std::size_t m = rand_int(rng, 1, 5), k = rand_int(rng, 1, 5), n = rand_int(rng, 1, 5);
    const T a = rand_tensor({m, k}, rng), b = rand_tensor({k, n}, rng);
    const T c = ops::matmul(V(a), V(b)).value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t q = 0; q < k; ++q) acc += a[i * k + q] * b[q * n + j];
        ASSERT_NEAR(c[i * n + j], acc, 1e-12);
      }
  }
}

TEST(Property, IndexAddIsAdjointOfIndexSelect) {
  // <select(x), y> == <x, index_add(y)> for every index map.
  testing_support::Rng rng(5);
  for (int it = 0; it < 100; ++it) {
    const std::size_t rows = rand_int(rng, 1, 6), n = rand_int(rng, 1, 8);
    ops::Index idx(n);
    for (auto& i : idx) i = rand_int(rng, 0, rows - 1);
    const T x = rand_tensor({rows, 2}, rng), y = rand_tensor({n, 2}, rng);
    const T sx = ops::index_select(V(x), idx).value();
    const T ay = ops::index_add(V(y), idx, rows).value();
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < sx.size(); ++i) lhs += sx[i] * y[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * ay[i];
    ASSERT_NEAR(lhs, rhs, 1e-12);
  }
}

TEST(Property, Float32AndFloat64Agree) {
  testing_support::Rng rng(6);
  for (int it = 0; it < 100; ++it) {
    const T a = rand_tensor({3, 4}, rng), b = rand_tensor({4, 2}, rng);
    const T d = ops::sigmoid(ops::matmul(V(a), V(b))).value();
    const Tensor<float> f =
        ops::sigmoid(ops::matmul(Var<float>(a.cast<float>()), Var<float>(b.cast<float>()))).value();
    for (std::size_t i = 0; i < d.size(); ++i) ASSERT_NEAR(d[i], f[i], 1e-5);
  }
}
