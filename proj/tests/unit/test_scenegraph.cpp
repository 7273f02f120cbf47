#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "zsscene/core/grad_check.hpp"
#include "zsscene/scenegraph.hpp"

using namespace zsscene;
using zsscene::testing::random_tensor;
using Tn = Tensor<double>;

namespace
{
  GatParams<double> single_layer(Tn w, Tn a, Activation act = Activation::relu)
  {
    GatParams<double> p;
    p.activation = act;
    p.layers.push_back({std::move(w), std::move(a)});
    return p;
  }

  // Per-edge transcription of the attention and aggregation formulas.
  struct NaiveGat
  {
    Tn alpha;
    Tn out;
  };

  NaiveGat naive_gat(const Tn& h, const Neighborhoods& nb, const Tn& w, const Tn& a, bool relu)
  {
    const std::size_t m = h.rows(), fo = w.rows(), fi = w.cols();
    std::vector<std::vector<double>> wh(m, std::vector<double>(fo, 0.0));
    for (std::size_t i = 0; i != m; ++i)
      for (std::size_t o = 0; o != fo; ++o)
        for (std::size_t c = 0; c != fi; ++c)
          wh[i][o] += w(o, c) * h(i, c);
    auto score = [&](std::size_t i, std::size_t j) {
      double s = 0;
      for (std::size_t o = 0; o != fo; ++o)
        s += a[o] * wh[i][o] + a[fo + o] * wh[j][o];
      return s > 0 ? s : 0.2 * s;
    };
    NaiveGat r{Tn(m, m), Tn(m, fo)};
    for (std::size_t i = 0; i != m; ++i) {
      double denom = 0;
      for (auto k : nb[i])
        denom += std::exp(score(i, k));
      for (auto j : nb[i])
        r.alpha(i, j) = std::exp(score(i, j)) / denom;
      for (std::size_t o = 0; o != fo; ++o) {
        double s = 0;
        for (auto j : nb[i])
          s += r.alpha(i, j) * wh[j][o];
        r.out(i, o) = relu ? std::max(0.0, s) : s;
      }
    }
    return r;
  }
}

TEST(BuildGraph, CompleteTopology)
{
  auto g1 = build_graph(Tn::row({1, 2, 3}));
  ASSERT_EQ(g1.num_nodes(), 1u);
  EXPECT_EQ(g1.neighborhoods()[0], std::vector<std::size_t>{0});

  SeededRng rng(1);
  auto g3 = build_graph(random_tensor(3, 4, rng));
  for (const auto& nb : g3.neighborhoods())
    EXPECT_EQ(nb.size(), 3u);
}

TEST(BuildGraph, EmptyRegionsRejected)
{
  EXPECT_THROW(build_graph(Tn(0, 3)), InvalidArgument);
  EXPECT_THROW(build_graph(std::vector<std::vector<double>>{}), InvalidArgument);
  EXPECT_THROW(build_graph(std::vector<std::vector<double>>{{1, 2}, {1}}), InvalidArgument);
}

TEST(BuildGraph, KnnMatchesBruteForceScan)
{
  SeededRng rng(12);
  for (int trial = 0; trial != 50; ++trial) {
    const Tn regions = random_tensor(4, 3, rng);
    auto g = build_graph(regions, Topology::knn(1));
    for (std::size_t i = 0; i != 4; ++i) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t j = 0; j != 4; ++j) {
        if (j == i)
          continue;
        double d = 0;
        for (std::size_t c = 0; c != 3; ++c)
          d += (regions(i, c) - regions(j, c)) * (regions(i, c) - regions(j, c));
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      std::vector<std::size_t> expected{i, best};
      std::sort(expected.begin(), expected.end());
      EXPECT_EQ(g.neighborhoods()[i], expected);
    }
  }
}

TEST(BuildGraph, KnnTiesPreferLowerIndex)
{
  // Nodes 1 and 2 are equidistant from node 0.
  auto g = build_graph(Tn::from_rows({{0, 0}, {1, 0}, {-1, 0}}), Topology::knn(1));
  EXPECT_EQ(g.neighborhoods()[0], (std::vector<std::size_t>{0, 1}));
}

TEST(SceneGraph, ValidatesNeighborhoods)
{
  EXPECT_THROW(SceneGraph<double>(Tn(2, 2), Neighborhoods{{0}, {0}}), InvalidArgument);
  EXPECT_THROW(SceneGraph<double>(Tn(2, 2), Neighborhoods{{0, 5}, {1}}), InvalidArgument);
  EXPECT_THROW(SceneGraph<double>(Tn(2, 2), Neighborhoods{{0}}), InvalidArgument);
}

TEST(Attention, SelfOnlyNeighborhoodIsOne)
{
  auto g = build_graph(Tn::row({0.5, -1.0}));
  auto att = attention_coefficients(g, g.features(), single_layer(Tn::identity(2), Tn(4, 1, 0.7)), 0);
  EXPECT_EQ(att(0, 0), 1.0);
}

TEST(Attention, ZeroAttentionVectorIsUniform)
{
  SeededRng rng(2);
  auto g = build_graph(random_tensor(5, 3, rng), Topology::knn(2));
  auto att = attention_coefficients(g, g.features(), single_layer(random_tensor(4, 3, rng), Tn(8, 1)), 0);
  for (std::size_t i = 0; i != 5; ++i)
    for (auto j : g.neighborhoods()[i])
      EXPECT_NEAR(att(i, j), 1.0 / static_cast<double>(g.neighborhoods()[i].size()), 1e-15);
}

TEST(Attention, TwoNodeHandEvaluation)
{
  // h1 = [1,0], h2 = [0,1], W = I, a = [-1, 0 | 0, 2].
  // e11 = lrelu(-1 + 0) = -0.2, e12 = lrelu(-1 + 2) = 1,
  // e21 = lrelu(0 + 0)  = 0,    e22 = lrelu(0 + 2)  = 2.
  auto g = build_graph(Tn::identity(2));
  auto att = attention_coefficients(g, g.features(), single_layer(Tn::identity(2), Tn(4, 1, std::vector<double>{-1, 0, 0, 2})), 0);
  const double z1 = std::exp(-0.2) + std::exp(1.0);
  const double z2 = std::exp(0.0) + std::exp(2.0);
  EXPECT_NEAR(att(0, 0), std::exp(-0.2) / z1, 1e-15);
  EXPECT_NEAR(att(0, 1), std::exp(1.0) / z1, 1e-15);
  EXPECT_NEAR(att(1, 0), 1.0 / z2, 1e-15);
  EXPECT_NEAR(att(1, 1), std::exp(2.0) / z2, 1e-15);
}

TEST(GatLayer, UniformAttentionAveragesNeighbors)
{
  auto g = build_graph(Tn::identity(2));
  auto out = gat_layer(g, g.features(), single_layer(Tn::identity(2), Tn(4, 1)), 0);
  EXPECT_EQ(out, Tn::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
}

TEST(GatLayer, SingleNodeIdentity)
{
  auto g = build_graph(Tn::row({0.3, 1.7, 0.0}));
  auto out = gat_layer(g, g.features(), single_layer(Tn::identity(3), Tn(6, 1, 0.4)), 0);
  EXPECT_EQ(out, g.features());
}

TEST(GatLayer, ShapeMismatch)
{
  auto g = build_graph(Tn::identity(2));
  EXPECT_THROW(gat_layer(g, g.features(), single_layer(Tn::identity(3), Tn(6, 1)), 0), ShapeError);
  EXPECT_THROW(gat_layer(g, g.features(), single_layer(Tn::identity(2), Tn(3, 1)), 0), ShapeError);
}

TEST(GatLayer, MatchesNaivePerEdgeLoop)
{
  SeededRng rng(41);
  for (int trial = 0; trial != 100; ++trial) {
    const auto m = 1 + rng.below(8), fi = 1 + rng.below(8), fo = 1 + rng.below(8);
    const Tn h = random_tensor(m, fi, rng);
    auto g = rng.below(2) ? build_graph(h) : build_graph(h, Topology::knn(1 + rng.below(3)));
    const Tn w = random_tensor(fo, fi, rng), a = random_tensor(2 * fo, 1, rng);
    const bool relu = rng.below(2) == 0;
    auto params = single_layer(w, a, relu ? Activation::relu : Activation::identity);
    const auto oracle = naive_gat(h, g.neighborhoods(), w, a, relu);
    const auto out = gat_layer(g, h, params, 0);
    const auto att = attention_coefficients(g, h, params, 0);
    for (std::size_t i = 0; i != out.size(); ++i)
      EXPECT_NEAR(out[i], oracle.out[i], 1e-10);
    for (std::size_t i = 0; i != att.alpha.size(); ++i)
      EXPECT_NEAR(att.alpha[i], oracle.alpha[i], 1e-10);
  }
}

TEST(GatLayer, PermutationEquivariance)
{
  SeededRng rng(43);
  for (int trial = 0; trial != 50; ++trial) {
    const auto m = 2 + rng.below(7), f = 1 + rng.below(6);
    const Tn h = random_tensor(m, f, rng);
    auto params = GatParams<double>::init(f, 4, 2, Activation::relu, rng);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    rng.shuffle(perm.begin(), perm.end());
    Tn ph(m, f);
    for (std::size_t i = 0; i != m; ++i)
      for (std::size_t c = 0; c != f; ++c)
        ph(i, c) = h(perm[i], c);

    auto g = build_graph(h), pg = build_graph(ph);
    Tn out = h, pout = ph;
    for (std::size_t l = 0; l != params.num_layers(); ++l) {
      out = gat_layer(g, out, params, l);
      pout = gat_layer(pg, pout, params, l);
    }
    for (std::size_t i = 0; i != m; ++i)
      for (std::size_t c = 0; c != out.cols(); ++c)
        EXPECT_LT(std::abs(pout(i, c) - out(perm[i], c)), 1e-10);
  }
}

TEST(Attention, RowsAreDistributionsAndEntropyBounded)
{
  SeededRng rng(44);
  for (int trial = 0; trial != 100; ++trial) {
    const auto m = 1 + rng.below(8);
    const Tn h = random_tensor(m, 3, rng, -3, 3);
    auto g = rng.below(2) ? build_graph(h) : build_graph(h, Topology::knn(1 + rng.below(3)));
    auto params = single_layer(random_tensor(5, 3, rng, -2, 2), random_tensor(10, 1, rng, -2, 2));
    auto att = attention_coefficients(g, h, params, 0);
    for (std::size_t i = 0; i != m; ++i) {
      double s = 0;
      for (std::size_t j = 0; j != m; ++j) {
        EXPECT_GE(att(i, j), 0.0);
        s += att(i, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
    const double e = attention_entropy(att);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
  }
}

TEST(AttentionEntropy, Examples)
{
  Neighborhoods nb{{0, 1, 2}, {0, 1, 2}, {0, 1, 2}};
  AttentionTensor<double> uniform{nb, Tn(3, 3, 1.0 / 3)};
  EXPECT_NEAR(attention_entropy(uniform), 1.0, 1e-12);

  AttentionTensor<double> onehot{nb, Tn::identity(3)};
  EXPECT_EQ(attention_entropy(onehot), 0.0);

  AttentionTensor<double> pair{Neighborhoods{{0, 1}, {1}}, Tn::from_rows({{0.75, 0.25}, {0, 1}})};
  const double expected = (-0.75 * std::log(0.75) - 0.25 * std::log(0.25)) / std::log(2.0);
  EXPECT_NEAR(attention_entropy(pair), expected, 1e-12);
  EXPECT_NEAR(expected, 0.8113, 1e-4);

  AttentionTensor<double> isolated{Neighborhoods{{0}}, Tn::identity(1)};
  EXPECT_EQ(attention_entropy(isolated), 0.0);
}

TEST(GatLayer, GradCheckWeightsAttentionAndFeatures)
{
  for (std::uint64_t seed = 1; seed != 6; ++seed) {
    SeededRng rng(seed);
    const std::size_t m = 4, fi = 3, fo = 5;
    const Tn h = random_tensor(m, fi, rng);
    const Tn w = random_tensor(fo, fi, rng), a = random_tensor(2 * fo, 1, rng);
    const Tn proj = random_tensor(m, fo, rng);
    auto g = build_graph(h, seed % 2 ? Topology::complete() : Topology::knn(2));
    ScalarFn<double> f = [&](Tape<double>& tape, std::span<const Var<double>> p) {
      auto r = gat_layer(p[2], g.neighborhoods(), GatLayerVars<double>{p[0], p[1]}, Activation::tanh);
      return ops::sum(ops::mul(r.features, tape.constant(proj)));
    };
    EXPECT_LT(grad_check<double>(f, {w, a, h}, 1e-5), 1e-4);
  }
}

TEST(GatLayer, StackingPreservesGraphStructure)
{
  SeededRng rng(3);
  const Tn h = random_tensor(6, 4, rng, 0, 1);
  auto g = build_graph(h, Topology::knn(2));
  auto params = GatParams<double>::init(4, 4, 3, Activation::relu, rng);
  for (auto& l : params.layers) {
    l.w = Tn::identity(4);
    l.a = Tn(8, 1);
  }
  Tn x = h;
  for (std::size_t l = 0; l != params.num_layers(); ++l) {
    x = gat_layer(g, x, params, l);
    EXPECT_EQ(x.rows(), g.num_nodes());
  }
  EXPECT_EQ(g.neighborhoods().size(), 6u);
}
