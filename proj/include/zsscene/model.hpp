#ifndef ZSSCENE_MODEL_HPP
#define ZSSCENE_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsscene/config.hpp"
#include "zsscene/core/error.hpp"
#include "zsscene/core/ops.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/core/tape.hpp"
#include "zsscene/core/tensor.hpp"
#include "zsscene/data/dataset.hpp"
#include "zsscene/encoders.hpp"
#include "zsscene/prompt.hpp"
#include "zsscene/scenegraph.hpp"

namespace zsscene
{
  /// Gated residual fusion of the global image embedding with the projected
  /// mean of the final GAT node features. lambda = sigmoid(gate); with
  /// `enabled` false lambda is exactly 0 and fusion is the identity on v.
  template <class T>
  struct FusionParams
  {
    Tensor<T> proj;  // d x gat_out
    Tensor<T> gate;  // 1 x 1 logit
    bool enabled = true;

    double lambda() const
    {
      if (!enabled)
        return 0.0;
      const double g = static_cast<double>(gate[0]);
      return g >= 0 ? 1.0 / (1.0 + std::exp(-g)) : std::exp(g) / (1.0 + std::exp(g));
    }
  };

  /// All learnable state plus the structural choices needed to run it.
  template <class T>
  struct ModelState
  {
    VisionEncoderParams<T> vision;
    TextEncoderParams<T> text;
    PromptBank<T> prompts;
    GatParams<T> gat;
    FusionParams<T> fusion;
    Tensor<T> log_tau;  // 1 x 1
    Topology topology;

    std::size_t d() const { return vision.output_dim(); }
    std::size_t feature_dim() const { return vision.input_dim(); }
    std::size_t region_dim() const { return gat.in_dim(); }
    double tau() const { return std::exp(static_cast<double>(log_tau[0])); }

    /// Draw order is fixed: vision, text, prompts, GAT, fusion.
    static ModelState init(const RunConfig& cfg, Vocabulary vocab, std::size_t feature_dim, std::size_t region_dim)
    {
      cfg.validate();
      SeededRng rng(cfg.seed);
      EmbeddingSpec spec{cfg.d};
      ModelState m;
      m.vision = VisionEncoderParams<T>::init(feature_dim, spec, rng);
      m.text = TextEncoderParams<T>::init(std::move(vocab), cfg.d, spec, rng);
      m.prompts = init_prompts<T>(cfg.prompt_tokens, cfg.d, rng);
      m.gat = GatParams<T>::init(region_dim, cfg.gat_out_dim(), cfg.gat_layers, cfg.activation(), rng);
      m.fusion.proj = glorot_uniform<T>(cfg.d, cfg.gat_out_dim(), rng);
      m.fusion.gate = Tensor<T>::scalar(static_cast<T>(std::log(cfg.lambda_init / (1.0 - cfg.lambda_init))));
      m.fusion.enabled = cfg.fusion;
      m.log_tau = Tensor<T>::scalar(static_cast<T>(std::log(cfg.tau_init)));
      m.topology = cfg.topology();
      return m;
    }

    /// Parameters in a fixed order, for optimizers and serialization.
    std::vector<std::pair<std::string, Tensor<T>*>> named_parameters()
    {
      std::vector<std::pair<std::string, Tensor<T>*>> out{
        {"vision.w1", &vision.w1}, {"vision.b1", &vision.b1}, {"vision.w2", &vision.w2}, {"vision.b2", &vision.b2},
        {"text.table", &text.table}, {"text.proj", &text.proj}, {"prompts", &prompts.vectors}};
      for (std::size_t l = 0; l != gat.layers.size(); ++l) {
        out.emplace_back("gat." + std::to_string(l) + ".w", &gat.layers[l].w);
        out.emplace_back("gat." + std::to_string(l) + ".a", &gat.layers[l].a);
      }
      out.emplace_back("fusion.proj", &fusion.proj);
      out.emplace_back("fusion.gate", &fusion.gate);
      out.emplace_back("log_tau", &log_tau);
      return out;
    }

    friend bool operator==(const ModelState& a, const ModelState& b)
    {
      auto& ma = const_cast<ModelState&>(a);
      auto& mb = const_cast<ModelState&>(b);
      auto pa = ma.named_parameters(), pb = mb.named_parameters();
      if (pa.size() != pb.size() || !(a.text.vocab == b.text.vocab) || a.fusion.enabled != b.fusion.enabled
          || a.gat.activation != b.gat.activation || a.topology.kind != b.topology.kind
          || a.topology.k != b.topology.k)
        return false;
      for (std::size_t i = 0; i != pa.size(); ++i)
        if (pa[i].first != pb[i].first || !(*pa[i].second == *pb[i].second))
          return false;
      return true;
    }
  };

  /// Which parameter groups receive gradients on a tape.
  struct Trainable
  {
    bool encoders = false;
    bool prompts = false;
    bool gat = false;
    bool fusion = false;
    bool temperature = false;

    static Trainable none() { return {}; }
    static Trainable all(bool temperature) { return {true, true, true, true, temperature}; }
  };

  template <class T>
  struct ModelVars
  {
    VisionVars<T> vision;
    TextVars<T> text;
    Var<T> prompts;
    std::vector<GatLayerVars<T>> gat;
    Var<T> fusion_proj;
    Var<T> fusion_gate;
    Var<T> log_tau;
  };

  template <class T>
  ModelVars<T> bind(Tape<T>& tape, const ModelState<T>& m, Trainable tr)
  {
    ModelVars<T> v;
    v.vision = bind(tape, m.vision, tr.encoders);
    v.text = bind(tape, m.text, tr.encoders);
    v.prompts = tape.leaf(m.prompts.vectors, tr.prompts);
    v.gat = bind(tape, m.gat, tr.gat);
    v.fusion_proj = tape.leaf(m.fusion.proj, tr.fusion);
    v.fusion_gate = tape.leaf(m.fusion.gate, tr.fusion && m.fusion.enabled);
    v.log_tau = tape.leaf(m.log_tau, tr.temperature);
    return v;
  }

  /// Node feature matrix for a record: its regions, or the image features as
  /// a single global node when the record has none.
  template <class T>
  Tensor<T> region_matrix(const SceneRecord& r, std::size_t region_dim)
  {
    if (r.regions.empty()) {
      if (r.image_features.size() != region_dim)
        throw ShapeError("regions", "record " + r.id + " has no regions and its image features ("
                         + std::to_string(r.image_features.size()) + ") cannot stand in for a "
                         + std::to_string(region_dim) + "-dim node");
      return Tensor<T>(1, region_dim, std::vector<T>(r.image_features.begin(), r.image_features.end()));
    }
    if (r.region_dim() != region_dim)
      throw ShapeError("regions", "record " + r.id + " has region dimension " + std::to_string(r.region_dim())
                       + ", model expects " + std::to_string(region_dim));
    std::vector<T> flat;
    flat.reserve(r.regions.size() * region_dim);
    for (const auto& reg : r.regions)
      flat.insert(flat.end(), reg.begin(), reg.end());
    return Tensor<T>(r.regions.size(), region_dim, std::move(flat));
  }

  template <class T>
  Tensor<T> feature_matrix(std::span<const SceneRecord* const> records, std::size_t feature_dim)
  {
    Tensor<T> x(records.size(), feature_dim);
    for (std::size_t i = 0; i != records.size(); ++i) {
      const auto& f = records[i]->image_features;
      if (f.size() != feature_dim)
        throw ShapeError("encode_image", "record " + records[i]->id + " has " + std::to_string(f.size())
                         + " image features, model expects " + std::to_string(feature_dim));
      for (std::size_t c = 0; c != feature_dim; ++c)
        x(i, c) = static_cast<T>(f[c]);
    }
    return x;
  }

  template <class T>
  struct ImageForward
  {
    Var<T> fused;                            // N x d, unit rows
    Var<T> global;                           // N x d, encode_image output
    std::vector<Var<T>> final_alpha;         // per record, M x M
    std::vector<Neighborhoods> neighborhoods;
  };

  /// Full image path: encode_image, GAT over each record's regions, gated
  /// fusion, l2norm.
  template <class T>
  ImageForward<T> forward_images(Tape<T>& tape, const ModelState<T>& m, const ModelVars<T>& v,
                                 std::span<const SceneRecord* const> records)
  {
    ImageForward<T> out;
    out.global = encode_images(tape.constant(feature_matrix<T>(records, m.feature_dim())), v.vision);

    std::vector<Var<T>> projected;
    for (const auto* r : records) {
      auto graph = build_graph(region_matrix<T>(*r, m.region_dim()), m.topology);
      auto [h, alphas] = run_gat(tape.constant(graph.features()), graph.neighborhoods(), v.gat, m.gat.activation);
      out.final_alpha.push_back(alphas.back());
      out.neighborhoods.push_back(graph.neighborhoods());
      if (m.fusion.enabled)
        projected.push_back(ops::matmul_bt(ops::mean_rows(h), v.fusion_proj));
    }

    if (!m.fusion.enabled) {
      out.fused = out.global;
      return out;
    }
    auto context = projected.size() == 1 ? projected.front() : ops::concat_rows(projected);
    auto lambda = ops::sigmoid(v.fusion_gate);
    auto keep = ops::sub(tape.constant(Tensor<T>::scalar(T(1))), lambda);
    auto mixed = ops::add(ops::mul_scalar(out.global, keep), ops::mul_scalar(context, lambda));
    try {
      out.fused = ops::l2norm_rows(mixed);
    } catch (const NumericError&) {
      throw NumericError("fuse: fused embedding cancelled to zero norm");
    }
    return out;
  }

  /// Caption path: tokenize, vocabulary lookup, prompts, encode_text.
  template <class T>
  Var<T> forward_texts(const ModelState<T>& m, const ModelVars<T>& v, const std::vector<Tokens>& texts)
  {
    std::vector<std::vector<std::size_t>> ids;
    ids.reserve(texts.size());
    for (const auto& t : texts)
      ids.push_back(m.text.vocab.lookup(t));
    std::optional<Var<T>> prompts;
    if (m.prompts.k() > 0)
      prompts = v.prompts;
    return encode_texts<T>(ids, v.text, prompts);
  }

  /// Value-level fusion of one embedding with GAT output node features.
  template <class T>
  Embedding<T> fuse(const Embedding<T>& v, const Tensor<T>& gat_nodes, const FusionParams<T>& params)
  {
    const double lambda = params.lambda();
    if (lambda == 0.0)
      return v;
    if (gat_nodes.rows() == 0 || gat_nodes.cols() != params.proj.cols())
      throw ShapeError("fuse", gat_nodes.rows(), gat_nodes.cols(), params.proj.rows(), params.proj.cols());
    if (v.size() != params.proj.rows())
      throw ShapeError("fuse", 1, v.size(), params.proj.rows(), params.proj.cols());
    std::vector<double> mean(gat_nodes.cols(), 0.0);
    for (std::size_t i = 0; i != gat_nodes.rows(); ++i)
      for (std::size_t c = 0; c != gat_nodes.cols(); ++c)
        mean[c] += static_cast<double>(gat_nodes(i, c));
    for (auto& x : mean)
      x /= static_cast<double>(gat_nodes.rows());
    std::vector<double> z(v.size());
    double norm = 0;
    for (std::size_t k = 0; k != v.size(); ++k) {
      double p = 0;
      for (std::size_t c = 0; c != mean.size(); ++c)
        p += static_cast<double>(params.proj(k, c)) * mean[c];
      z[k] = (1.0 - lambda) * static_cast<double>(v[k]) + lambda * p;
      norm += z[k] * z[k];
    }
    norm = std::sqrt(norm);
    if (!(norm > ops::kNormEpsilon))
      throw NumericError("fuse: fused embedding cancelled to zero norm");
    std::vector<T> out(z.size());
    for (std::size_t k = 0; k != z.size(); ++k)
      out[k] = static_cast<T>(z[k] / norm);
    return Embedding<T>(std::move(out));
  }
}

#endif
