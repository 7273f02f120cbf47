#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "zsscene/core/adam.hpp"
#include "zsscene/core/grad_check.hpp"
#include "zsscene/core/ops.hpp"
#include "zsscene/core/rng.hpp"

using namespace zsscene;
using Tn = Tensor<double>;

namespace
{
  Tn random_tensor(std::size_t r, std::size_t c, SeededRng& rng, double lo = -1.0, double hi = 1.0)
  {
    Tn t(r, c);
    for (auto& v : t.values())
      v = rng.uniform(lo, hi);
    return t;
  }

  // Projects an op output to a scalar with fixed random weights so every
  // output entry contributes a distinct gradient.
  Var<double> weighted_sum(Tape<double>& tape, Var<double> y, std::uint64_t seed)
  {
    SeededRng rng(seed);
    auto w = tape.constant(random_tensor(y.rows(), y.cols(), rng));
    return ops::sum(ops::mul(y, w));
  }
}

TEST(Forward, IdentityMatmul)
{
  Tape<double> tape;
  auto x = tape.constant(Tn::row({3, 4}));
  auto eye = tape.constant(Tn::identity(2));
  auto y = ops::matmul(x, eye);
  EXPECT_EQ(y.value(), Tn::row({3, 4}));
  EXPECT_EQ(ops::matmul_bt(x, eye).value(), Tn::row({3, 4}));
}

TEST(Forward, SoftmaxOfEqualLogits)
{
  Tape<double> tape;
  auto y = ops::softmax_rows(tape.constant(Tn::row({0, 0})));
  EXPECT_DOUBLE_EQ(y.value()[0], 0.5);
  EXPECT_DOUBLE_EQ(y.value()[1], 0.5);
}

TEST(Forward, L2NormThreeFourFive)
{
  Tape<double> tape;
  auto y = ops::l2norm_rows(tape.constant(Tn::row({3, 4})));
  EXPECT_NEAR(y.value()[0], 0.6, 1e-15);
  EXPECT_NEAR(y.value()[1], 0.8, 1e-15);
}

TEST(Forward, ShapeMismatchNamesOpAndShapes)
{
  Tape<double> tape;
  auto a = tape.constant(Tn(2, 3));
  auto b = tape.constant(Tn(2, 2));
  try {
    ops::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.op(), "matmul");
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(2x3)"), std::string::npos);
    EXPECT_NE(msg.find("(2x2)"), std::string::npos);
  }
}

TEST(Forward, OverflowIsAnError)
{
  Tape<double> tape;
  EXPECT_THROW(ops::exp(tape.constant(Tn::row({1000.0}))), NumericError);
  EXPECT_THROW(ops::log(tape.constant(Tn::row({-1.0}))), NumericError);
  EXPECT_THROW(tape.leaf(Tn::row({std::nan("")})), NumericError);
}

TEST(Forward, NormalizingZeroIsAnError)
{
  Tape<double> tape;
  EXPECT_THROW(ops::l2norm_rows(tape.constant(Tn::row({0.0, 0.0}))), NumericError);
  EXPECT_THROW(ops::l2norm_rows(tape.constant(Tn::row({1e-13, 0.0}))), NumericError);
}

TEST(Backward, SumOfSquares)
{
  Tape<double> tape;
  auto x = tape.leaf(Tn::row({1, 2}));
  tape.backward(ops::sum(ops::mul(x, x)));
  EXPECT_EQ(tape.grad(x), Tn::row({2, 4}));
}

TEST(Backward, ConstantHasZeroGradient)
{
  Tape<double> tape;
  auto x = tape.leaf(Tn::row({1, 2, 3}));
  auto c = tape.constant(Tn::scalar(5.0));
  tape.backward(ops::sum(c));
  EXPECT_EQ(tape.grad(x), Tn(1, 3));
}

TEST(Backward, NonScalarOutputRejected)
{
  Tape<double> tape;
  auto x = tape.leaf(Tn::row({1, 2}));
  EXPECT_THROW(tape.backward(ops::relu(x)), ShapeError);
}

TEST(Backward, SoftmaxCrossEntropyMatchesFiniteDifference)
{
  // loss = -log softmax(x)[target] over a 2x3 batch.
  const Tn x0 = Tn::from_rows({{0.3, -1.2, 0.8}, {1.5, 0.1, -0.4}});
  const std::vector<std::size_t> target{2, 0};
  auto loss_of = [&](const Tn& x) {
    double total = 0;
    for (std::size_t i = 0; i != x.rows(); ++i) {
      double z = 0;
      for (std::size_t j = 0; j != x.cols(); ++j)
        z += std::exp(x(i, j));
      total -= x(i, target[i]) - std::log(z);
    }
    return total / static_cast<double>(x.rows());
  };

  Tape<double> tape;
  auto x = tape.leaf(x0);
  auto loss = ops::scale(ops::mean(ops::pick(ops::log_softmax_rows(x), target)), -1.0);
  EXPECT_NEAR(loss.value().item(), loss_of(x0), 1e-14);
  tape.backward(loss);
  const auto g = tape.grad(x);

  const double eps = 1e-5;
  for (std::size_t i = 0; i != x0.size(); ++i) {
    Tn up = x0, down = x0;
    up[i] += eps;
    down[i] -= eps;
    const double fd = (loss_of(up) - loss_of(down)) / (2 * eps);
    EXPECT_LE(std::abs(g[i] - fd) / std::max(1.0, std::abs(fd)), 1e-6) << "entry " << i;
  }
}

TEST(GradCheck, Quadratic)
{
  ScalarFn<double> f = [](Tape<double>&, std::span<const Var<double>> p) {
    return ops::sum(ops::mul(p[0], p[0]));
  };
  EXPECT_LT(grad_check<double>(f, {Tn::row({1, 2, 3})}, 1e-5), 1e-8);
}

TEST(GradCheck, ConstantFunctionIsExact)
{
  ScalarFn<double> f = [](Tape<double>& tape, std::span<const Var<double>>) {
    return tape.constant(Tn::scalar(2.5));
  };
  EXPECT_EQ(grad_check<double>(f, {Tn::row({1, 2, 3})}, 1e-5), 0.0);
}

TEST(GradCheck, RejectsNonPositiveStep)
{
  ScalarFn<double> f = [](Tape<double>&, std::span<const Var<double>> p) { return ops::sum(p[0]); };
  EXPECT_THROW(grad_check<double>(f, {Tn::row({1.0})}, 0.0), InvalidArgument);
}

// Every differentiable op on randomized shapes up to 16x16.
class OpGradient : public ::testing::TestWithParam<std::uint64_t>
{
protected:
  void check(const char* name, const std::function<Var<double>(Tape<double>&, std::span<const Var<double>>)>& op,
             std::vector<Tn> params)
  {
    const std::uint64_t seed = GetParam();
    ScalarFn<double> f = [&](Tape<double>& tape, std::span<const Var<double>> p) {
      return weighted_sum(tape, op(tape, p), seed * 7919 + 13);
    };
    EXPECT_LT(grad_check<double>(f, params, 1e-5), 1e-6) << name;
  }
};

TEST_P(OpGradient, AllOps)
{
  SeededRng rng(GetParam());
  const std::size_t r = 1 + rng.below(16);
  const std::size_t c = 1 + rng.below(16);
  const std::size_t k = 1 + rng.below(16);

  // Keep inputs away from the ReLU kinks.
  auto away_from_zero = [&](std::size_t rr, std::size_t cc) {
    Tn t = random_tensor(rr, cc, rng);
    for (auto& v : t.values())
      v = v >= 0 ? v + 0.05 : v - 0.05;
    return t;
  };

  using P = std::span<const Var<double>>;
  check("add", [](Tape<double>&, P p) { return ops::add(p[0], p[1]); }, {random_tensor(r, c, rng), random_tensor(r, c, rng)});
  check("sub", [](Tape<double>&, P p) { return ops::sub(p[0], p[1]); }, {random_tensor(r, c, rng), random_tensor(r, c, rng)});
  check("mul", [](Tape<double>&, P p) { return ops::mul(p[0], p[1]); }, {random_tensor(r, c, rng), random_tensor(r, c, rng)});
  check("scale", [](Tape<double>&, P p) { return ops::scale(p[0], -1.7); }, {random_tensor(r, c, rng)});
  check("mul_scalar", [](Tape<double>&, P p) { return ops::mul_scalar(p[0], p[1]); },
        {random_tensor(r, c, rng), random_tensor(1, 1, rng)});
  check("add_row", [](Tape<double>&, P p) { return ops::add_row(p[0], p[1]); },
        {random_tensor(r, c, rng), random_tensor(1, c, rng)});
  check("matmul", [](Tape<double>&, P p) { return ops::matmul(p[0], p[1]); },
        {random_tensor(r, k, rng), random_tensor(k, c, rng)});
  check("matmul_bt", [](Tape<double>&, P p) { return ops::matmul_bt(p[0], p[1]); },
        {random_tensor(r, k, rng), random_tensor(c, k, rng)});
  check("transpose", [](Tape<double>&, P p) { return ops::transpose(p[0]); }, {random_tensor(r, c, rng)});
  check("relu", [](Tape<double>&, P p) { return ops::relu(p[0]); }, {away_from_zero(r, c)});
  check("leaky_relu", [](Tape<double>&, P p) { return ops::leaky_relu(p[0]); }, {away_from_zero(r, c)});
  check("tanh", [](Tape<double>&, P p) { return ops::tanh(p[0]); }, {random_tensor(r, c, rng)});
  check("sigmoid", [](Tape<double>&, P p) { return ops::sigmoid(p[0]); }, {random_tensor(r, c, rng, -4, 4)});
  check("exp", [](Tape<double>&, P p) { return ops::exp(p[0]); }, {random_tensor(r, c, rng)});
  check("log", [](Tape<double>&, P p) { return ops::log(p[0]); }, {random_tensor(r, c, rng, 0.5, 3.0)});
  check("l2norm", [](Tape<double>&, P p) { return ops::l2norm_rows(p[0]); }, {away_from_zero(r, c)});
  check("softmax", [](Tape<double>&, P p) { return ops::softmax_rows(p[0]); }, {random_tensor(r, c, rng, -3, 3)});
  check("log_softmax", [](Tape<double>&, P p) { return ops::log_softmax_rows(p[0]); }, {random_tensor(r, c, rng, -3, 3)});
  check("mean", [](Tape<double>&, P p) { return ops::mean(p[0]); }, {random_tensor(r, c, rng)});
  check("mean_rows", [](Tape<double>&, P p) { return ops::mean_rows(p[0]); }, {random_tensor(r, c, rng)});
  check("concat_rows", [](Tape<double>&, P p) { return ops::concat_rows<double>({p[0], p[1]}); },
        {random_tensor(r, c, rng), random_tensor(k, c, rng)});
  check("slice_rows", [r](Tape<double>&, P p) { return ops::slice_rows(p[0], r / 2, r); }, {random_tensor(r, c, rng)});
  check("outer_add", [](Tape<double>&, P p) { return ops::outer_add(p[0], p[1]); },
        {random_tensor(r, 1, rng), random_tensor(c, 1, rng)});

  std::vector<std::size_t> idx(k);
  for (auto& i : idx)
    i = rng.below(r);
  check("gather_rows", [idx](Tape<double>&, P p) { return ops::gather_rows(p[0], idx); }, {random_tensor(r, c, rng)});

  std::vector<std::size_t> cols(r);
  for (auto& j : cols)
    j = rng.below(c);
  check("pick", [cols](Tape<double>&, P p) { return ops::pick(p[0], cols); }, {random_tensor(r, c, rng)});

  std::vector<std::vector<std::size_t>> support(r);
  for (auto& s : support) {
    for (std::size_t j = 0; j != c; ++j)
      if (rng.below(2) == 0)
        s.push_back(j);
    if (s.empty())
      s.push_back(rng.below(c));
  }
  check("softmax_over", [support](Tape<double>&, P p) { return ops::softmax_over(p[0], support); },
        {random_tensor(r, c, rng, -3, 3)});
}

INSTANTIATE_TEST_SUITE_P(RandomShapes, OpGradient, ::testing::Range<std::uint64_t>(1, 9));

TEST(Properties, SoftmaxRowsAreDistributions)
{
  SeededRng rng(3);
  for (int trial = 0; trial != 50; ++trial) {
    Tape<double> tape;
    const auto r = 1 + rng.below(16), c = 1 + rng.below(16);
    auto y = ops::softmax_rows(tape.constant(random_tensor(r, c, rng, -30, 30))).value();
    for (std::size_t i = 0; i != r; ++i) {
      double s = 0;
      for (auto v : y.row_span(i)) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Properties, L2NormRowsHaveUnitLength)
{
  SeededRng rng(4);
  for (int trial = 0; trial != 50; ++trial) {
    Tape<double> tape;
    const auto r = 1 + rng.below(16), c = 1 + rng.below(16);
    const double mag = std::pow(10.0, rng.uniform(-6, 6));
    auto y = ops::l2norm_rows(tape.constant(random_tensor(r, c, rng, -mag, mag))).value();
    for (std::size_t i = 0; i != r; ++i)
      EXPECT_NEAR(l2_norm(y.row_span(i)), 1.0, 1e-9);
  }
}

TEST(Properties, BackwardIsLinearInTheLoss)
{
  SeededRng rng(5);
  const Tn x0 = random_tensor(4, 6, rng);
  const Tn w = random_tensor(6, 3, rng);
  auto loss_a = [&](Tape<double>& tape, Var<double> x) {
    return ops::sum(ops::tanh(ops::matmul(x, tape.constant(w))));
  };
  auto loss_b = [&](Tape<double>&, Var<double> x) {
    return ops::mean(ops::log_softmax_rows(x));
  };

  Tape<double> ta;
  auto xa = ta.leaf(x0);
  ta.backward(loss_a(ta, xa));
  Tape<double> tb;
  auto xb = tb.leaf(x0);
  tb.backward(loss_b(tb, xb));
  Tape<double> ts;
  auto xs = ts.leaf(x0);
  ts.backward(ops::add(loss_a(ts, xs), loss_b(ts, xs)));

  const auto ga = ta.grad(xa), gb = tb.grad(xb), gs = ts.grad(xs);
  for (std::size_t i = 0; i != x0.size(); ++i)
    EXPECT_NEAR(gs[i], ga[i] + gb[i], 1e-9);
}

TEST(Rng, SameSeedSameStream)
{
  SeededRng a(42), b(42);
  for (int i = 0; i != 100; ++i) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, DifferentSeedsDiffer)
{
  SeededRng a(1), b(2);
  EXPECT_NE(a.uniform(), b.uniform());
}

TEST(Rng, UniformMeanIsCentered)
{
  SeededRng rng(2024);
  double s = 0;
  const int n = 100000;
  for (int i = 0; i != n; ++i)
    s += rng.uniform();
  EXPECT_GE(s / n, 0.49);
  EXPECT_LE(s / n, 0.51);
}

TEST(Rng, GlorotBounds)
{
  SeededRng rng(9);
  auto w = glorot_uniform<double>(8, 16, rng);
  const double limit = std::sqrt(6.0 / 24.0);
  for (auto v : w.values())
    EXPECT_LE(std::abs(v), limit);
}

TEST(Adam, MinimizesQuadratic)
{
  Tn x = Tn::row({3.0, -2.0});
  Adam<double> opt({0.1, 0.9, 0.999, 1e-8});
  for (int step = 0; step != 500; ++step) {
    Tape<double> tape;
    auto v = tape.leaf(x);
    tape.backward(ops::sum(ops::mul(v, v)));
    opt.step({&x}, {tape.grad(v)});
  }
  EXPECT_NEAR(x[0], 0.0, 1e-2);
  EXPECT_NEAR(x[1], 0.0, 1e-2);
}

TEST(Precision, FloatModeRuns)
{
  Tape<float> tape;
  auto x = tape.leaf(Tensor<float>::row({3.f, 4.f}));
  auto y = ops::l2norm_rows(x);
  EXPECT_NEAR(y.value()[0], 0.6f, 1e-6f);
  tape.backward(ops::sum(y));
  EXPECT_TRUE(tape.grad(x).all_finite());
}
