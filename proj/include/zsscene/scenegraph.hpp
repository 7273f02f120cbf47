#ifndef ZSSCENE_SCENEGRAPH_HPP
#define ZSSCENE_SCENEGRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/ops.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/core/tape.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene
{
  using Neighborhoods = std::vector<std::vector<std::size_t>>;

  struct Topology
  {
    enum class Kind { complete, knn };
    Kind kind = Kind::complete;
    std::size_t k = 3;

    static Topology complete() { return {Kind::complete, 0}; }
    static Topology knn(std::size_t k) { return {Kind::knn, k}; }
  };

  /// Regions as nodes. Every neighborhood is sorted and contains the node
  /// itself.
  template <class T>
  class SceneGraph
  {
  public:
    SceneGraph(Tensor<T> node_features, Neighborhoods neighborhoods)
      : features_(std::move(node_features)), neighborhoods_(std::move(neighborhoods))
    {
      const std::size_t m = features_.rows();
      if (m == 0)
        throw InvalidArgument("scene graph: at least one node required");
      if (neighborhoods_.size() != m)
        throw InvalidArgument("scene graph: neighborhood count does not match node count");
      for (std::size_t i = 0; i != m; ++i) {
        auto& nb = neighborhoods_[i];
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        if (!nb.empty() && nb.back() >= m)
          throw InvalidArgument("scene graph: neighbor index out of range at node " + std::to_string(i));
        if (!std::binary_search(nb.begin(), nb.end(), i))
          throw InvalidArgument("scene graph: node " + std::to_string(i) + " lacks a self-loop");
      }
    }

    std::size_t num_nodes() const noexcept { return features_.rows(); }
    std::size_t feature_dim() const noexcept { return features_.cols(); }
    const Tensor<T>& features() const noexcept { return features_; }
    const Neighborhoods& neighborhoods() const noexcept { return neighborhoods_; }

  private:
    Tensor<T> features_;
    Neighborhoods neighborhoods_;
  };

  template <class T>
  SceneGraph<T> build_graph(const Tensor<T>& regions, const Topology& topology = Topology::complete())
  {
    const std::size_t m = regions.rows();
    if (m == 0)
      throw InvalidArgument("build_graph: empty region list");
    Neighborhoods nb(m);
    if (topology.kind == Topology::Kind::complete) {
      for (auto& n : nb) {
        n.resize(m);
        std::iota(n.begin(), n.end(), std::size_t(0));
      }
    } else {
      for (std::size_t i = 0; i != m; ++i) {
        std::vector<std::pair<T, std::size_t>> dist;
        for (std::size_t j = 0; j != m; ++j) {
          if (j == i)
            continue;
          T s(0);
          for (std::size_t c = 0; c != regions.cols(); ++c) {
            const T diff = regions(i, c) - regions(j, c);
            s += diff * diff;
          }
          dist.emplace_back(s, j);
        }
        // Ties fall to the lower index because pairs compare on index second.
        std::sort(dist.begin(), dist.end());
        nb[i].push_back(i);
        for (std::size_t r = 0; r != std::min(topology.k, dist.size()); ++r)
          nb[i].push_back(dist[r].second);
      }
    }
    return SceneGraph<T>(regions, std::move(nb));
  }

  template <class T>
  SceneGraph<T> build_graph(const std::vector<std::vector<T>>& regions, const Topology& topology = Topology::complete())
  {
    if (regions.empty())
      throw InvalidArgument("build_graph: empty region list");
    const std::size_t f = regions.front().size();
    std::vector<T> flat;
    for (const auto& r : regions) {
      if (r.size() != f)
        throw InvalidArgument("build_graph: region feature dimensions differ");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return build_graph(Tensor<T>(regions.size(), f, std::move(flat)), topology);
  }

  enum class Activation { relu, tanh, identity };

  /// One single-head attention layer: W is f_out x f_in, a is 2 f_out x 1.
  template <class T>
  struct GatLayerParams
  {
    Tensor<T> w;
    Tensor<T> a;

    std::size_t in_dim() const noexcept { return w.cols(); }
    std::size_t out_dim() const noexcept { return w.rows(); }
  };

  template <class T>
  struct GatParams
  {
    std::vector<GatLayerParams<T>> layers;
    Activation activation = Activation::relu;

    std::size_t num_layers() const noexcept { return layers.size(); }
    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

    static GatParams init(std::size_t in_dim, std::size_t out_dim, std::size_t num_layers, Activation act,
                          SeededRng& rng)
    {
      if (num_layers == 0 || in_dim == 0 || out_dim == 0)
        throw InvalidArgument("gat: layers and dimensions must be positive");
      GatParams p;
      p.activation = act;
      std::size_t fin = in_dim;
      for (std::size_t l = 0; l != num_layers; ++l) {
        GatLayerParams<T> layer;
        layer.w = glorot_uniform<T>(out_dim, fin, rng);
        layer.a = glorot_uniform<T>(2 * out_dim, 1, rng);
        p.layers.push_back(std::move(layer));
        fin = out_dim;
      }
      return p;
    }

    void validate() const
    {
      if (layers.empty())
        throw InvalidArgument("gat: no layers");
      for (std::size_t l = 0; l != layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.a.rows() != 2 * layer.out_dim() || layer.a.cols() != 1)
          throw ShapeError("gat", "layer " + std::to_string(l) + " attention vector must be "
                           + ShapeError::dims(2 * layer.out_dim(), 1));
        if (l > 0 && layer.in_dim() != layers[l - 1].out_dim())
          throw ShapeError("gat", "layer " + std::to_string(l) + " input does not chain from previous output");
      }
    }
  };

  /// alpha(i, .) is a distribution over N(i), stored densely (M x M) with
  /// zeros outside the neighborhood.
  template <class T>
  struct AttentionTensor
  {
    Neighborhoods neighborhoods;
    Tensor<T> alpha;

    T operator()(std::size_t i, std::size_t j) const { return alpha(i, j); }
  };

  template <class T>
  struct GatLayerVars
  {
    Var<T> w, a;
  };

  template <class T>
  std::vector<GatLayerVars<T>> bind(Tape<T>& tape, const GatParams<T>& p, bool trainable)
  {
    std::vector<GatLayerVars<T>> out;
    for (const auto& l : p.layers)
      out.push_back({tape.leaf(l.w, trainable), tape.leaf(l.a, trainable)});
    return out;
  }

  namespace detail
  {
    template <class T>
    Var<T> activate(Var<T> x, Activation act)
    {
      switch (act) {
        case Activation::relu: return ops::relu(x);
        case Activation::tanh: return ops::tanh(x);
        case Activation::identity: return x;
      }
      return x;
    }
  }

  template <class T>
  struct GatLayerResult
  {
    Var<T> features;  // M x f_out
    Var<T> alpha;     // M x M
  };

  /// h_i' = act( sum_{j in N(i)} alpha_ij W h_j ) with
  /// alpha_ij = softmax_{j in N(i)} LeakyReLU(a . [W h_i || W h_j]).
  template <class T>
  GatLayerResult<T> gat_layer(Var<T> h, const Neighborhoods& nb, const GatLayerVars<T>& layer, Activation act)
  {
    if (h.cols() != layer.w.cols())
      throw ShapeError("gat_layer", h.rows(), h.cols(), layer.w.rows(), layer.w.cols());
    if (nb.size() != h.rows())
      throw ShapeError("gat_layer", "neighborhood count does not match node count");
    const std::size_t fo = layer.w.rows();
    if (layer.a.rows() != 2 * fo || layer.a.cols() != 1)
      throw ShapeError("gat_layer", layer.a.rows(), layer.a.cols(), 2 * fo, 1);

    auto z = ops::matmul_bt(h, layer.w);
    auto src = ops::matmul(z, ops::slice_rows(layer.a, 0, fo));
    auto dst = ops::matmul(z, ops::slice_rows(layer.a, fo, 2 * fo));
    auto scores = ops::leaky_relu(ops::outer_add(src, dst));
    auto alpha = ops::softmax_over(scores, nb);
    return {detail::activate(ops::matmul(alpha, z), act), alpha};
  }

  /// Runs every layer. Returns final node features and per-layer attention.
  template <class T>
  std::pair<Var<T>, std::vector<Var<T>>> run_gat(Var<T> h, const Neighborhoods& nb,
                                                 const std::vector<GatLayerVars<T>>& layers, Activation act)
  {
    std::vector<Var<T>> alphas;
    for (const auto& layer : layers) {
      auto r = gat_layer(h, nb, layer, act);
      h = r.features;
      alphas.push_back(r.alpha);
    }
    return {h, alphas};
  }

  template <class T>
  AttentionTensor<T> attention_coefficients(const SceneGraph<T>& g, const Tensor<T>& h, const GatParams<T>& params,
                                            std::size_t layer)
  {
    if (layer >= params.layers.size())
      throw InvalidArgument("attention_coefficients: layer index out of range");
    Tape<T> tape;
    auto vars = bind(tape, params, false);
    auto r = gat_layer(tape.constant(h), g.neighborhoods(), vars[layer], params.activation);
    return {g.neighborhoods(), r.alpha.value()};
  }

  template <class T>
  Tensor<T> gat_layer(const SceneGraph<T>& g, const Tensor<T>& h, const GatParams<T>& params, std::size_t layer)
  {
    if (layer >= params.layers.size())
      throw InvalidArgument("gat_layer: layer index out of range");
    Tape<T> tape;
    auto vars = bind(tape, params, false);
    return gat_layer(tape.constant(h), g.neighborhoods(), vars[layer], params.activation).features.value();
  }

  /// Mean over nodes with at least two neighbors of the attention entropy
  /// normalized by ln|N(i)|, so the result lies in [0, 1]. 0 ln 0 = 0.
  /// Returns 0 when no node has two or more neighbors.
  template <class T>
  double attention_entropy(const AttentionTensor<T>& att)
  {
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i != att.neighborhoods.size(); ++i) {
      const auto& nb = att.neighborhoods[i];
      if (nb.size() < 2)
        continue;
      double h = 0.0;
      for (auto j : nb) {
        const double p = static_cast<double>(att.alpha(i, j));
        if (p > 0.0)
          h -= p * std::log(p);
      }
      total += std::clamp(h / std::log(static_cast<double>(nb.size())), 0.0, 1.0);
      ++counted;
    }
    return counted ? total / static_cast<double>(counted) : 0.0;
  }
}

#endif
