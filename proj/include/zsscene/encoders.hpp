#ifndef ZSSCENE_ENCODERS_HPP
#define ZSSCENE_ENCODERS_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/ops.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/core/tape.hpp"
#include "zsscene/core/tensor.hpp"
#include "zsscene/prompt.hpp"
#include "zsscene/tokenize.hpp"

namespace zsscene
{
  inline constexpr double kUnitNormTolerance = 1e-6;

  struct EmbeddingSpec
  {
    std::size_t d = 64;

    void validate() const
    {
      if (d < 2)
        throw InvalidArgument("embedding dimension must be >= 2, got " + std::to_string(d));
    }
  };

  /// A point on the unit sphere of the shared space.
  template <class T>
  class Embedding
  {
  public:
    explicit Embedding(std::vector<T> v) : v_(std::move(v))
    {
      double s = 0;
      for (auto x : v_)
        s += static_cast<double>(x) * static_cast<double>(x);
      if (v_.empty() || std::abs(std::sqrt(s) - 1.0) > kUnitNormTolerance)
        throw NumericError("embedding is not unit-norm (norm " + std::to_string(std::sqrt(s)) + ")");
    }

    std::span<const T> values() const noexcept { return v_; }
    std::size_t size() const noexcept { return v_.size(); }
    T operator[](std::size_t i) const { return v_[i]; }

  private:
    std::vector<T> v_;
  };

  /// Two-layer perceptron: features -> ReLU(hidden = 2d) -> d, then l2norm.
  /// Weights are stored out x in.
  template <class T>
  struct VisionEncoderParams
  {
    Tensor<T> w1, b1, w2, b2;

    std::size_t input_dim() const noexcept { return w1.cols(); }
    std::size_t output_dim() const noexcept { return w2.rows(); }

    static VisionEncoderParams init(std::size_t input_dim, const EmbeddingSpec& spec, SeededRng& rng)
    {
      spec.validate();
      if (input_dim == 0)
        throw InvalidArgument("vision encoder: input dimension must be positive");
      const std::size_t hidden = 2 * spec.d;
      VisionEncoderParams p;
      p.w1 = glorot_uniform<T>(hidden, input_dim, rng);
      p.b1 = Tensor<T>(1, hidden);
      p.w2 = glorot_uniform<T>(spec.d, hidden, rng);
      p.b2 = Tensor<T>(1, spec.d);
      return p;
    }
  };

  /// Token embedding table, mean-pool, linear projection, l2norm.
  template <class T>
  struct TextEncoderParams
  {
    Vocabulary vocab;
    Tensor<T> table;  // vocab.size() x token_dim
    Tensor<T> proj;   // d x token_dim

    std::size_t token_dim() const noexcept { return table.cols(); }
    std::size_t output_dim() const noexcept { return proj.rows(); }

    static TextEncoderParams init(Vocabulary vocab, std::size_t token_dim, const EmbeddingSpec& spec,
                                  SeededRng& rng)
    {
      spec.validate();
      TextEncoderParams p;
      p.table = glorot_uniform<T>(vocab.size(), token_dim, rng);
      p.proj = glorot_uniform<T>(spec.d, token_dim, rng);
      p.vocab = std::move(vocab);
      return p;
    }
  };

  template <class T>
  struct VisionVars
  {
    Var<T> w1, b1, w2, b2;
  };

  template <class T>
  struct TextVars
  {
    Var<T> table, proj;
  };

  template <class T>
  VisionVars<T> bind(Tape<T>& tape, const VisionEncoderParams<T>& p, bool trainable)
  {
    return {tape.leaf(p.w1, trainable), tape.leaf(p.b1, trainable), tape.leaf(p.w2, trainable),
            tape.leaf(p.b2, trainable)};
  }

  template <class T>
  TextVars<T> bind(Tape<T>& tape, const TextEncoderParams<T>& p, bool trainable)
  {
    return {tape.leaf(p.table, trainable), tape.leaf(p.proj, trainable)};
  }

  /// Batch of feature rows (N x in) -> unit embeddings (N x d).
  template <class T>
  Var<T> encode_images(Var<T> features, const VisionVars<T>& v)
  {
    if (features.cols() != v.w1.cols())
      throw ShapeError("encode_image", "feature length " + std::to_string(features.cols())
                       + " does not match encoder input " + std::to_string(v.w1.cols()));
    auto hidden = ops::relu(ops::add_row(ops::matmul_bt(features, v.w1), v.b1));
    return ops::l2norm_rows(ops::add_row(ops::matmul_bt(hidden, v.w2), v.b2));
  }

  /// Mean-pooled input sequence for one text: optional prompt rows followed
  /// by the token embeddings. Returns 1 x token_dim.
  template <class T>
  Var<T> pooled_text(const std::vector<std::size_t>& ids, const TextVars<T>& v, std::optional<Var<T>> prompts)
  {
    std::vector<Var<T>> parts;
    if (prompts && prompts->rows() > 0) {
      if (prompts->cols() != v.table.cols())
        throw ShapeError("encode_text", prompts->rows(), prompts->cols(), v.table.rows(), v.table.cols());
      parts.push_back(*prompts);
    }
    if (!ids.empty())
      parts.push_back(ops::gather_rows(v.table, ids));
    if (parts.empty())
      throw InvalidArgument("encode_text: empty token sequence and no prompts");
    return ops::mean_rows(parts.size() == 1 ? parts.front() : ops::concat_rows(parts));
  }

  /// Batch of token-id sequences -> unit embeddings (N x d).
  template <class T>
  Var<T> encode_texts(const std::vector<std::vector<std::size_t>>& batch, const TextVars<T>& v,
                      std::optional<Var<T>> prompts)
  {
    if (batch.empty())
      throw InvalidArgument("encode_text: empty batch");
    std::vector<Var<T>> pooled;
    pooled.reserve(batch.size());
    for (const auto& ids : batch)
      pooled.push_back(pooled_text(ids, v, prompts));
    auto stacked = pooled.size() == 1 ? pooled.front() : ops::concat_rows(pooled);
    return ops::l2norm_rows(ops::matmul_bt(stacked, v.proj));
  }

  template <class T>
  Embedding<T> encode_image(std::span<const T> features, const VisionEncoderParams<T>& params)
  {
    Tape<T> tape;
    auto vars = bind(tape, params, false);
    auto x = tape.constant(Tensor<T>(1, features.size(), std::vector<T>(features.begin(), features.end())));
    return Embedding<T>(encode_images(x, vars).value().row_vector(0));
  }

  template <class T>
  Embedding<T> encode_text(const Tokens& tokens, const TextEncoderParams<T>& params,
                           const PromptBank<T>* prompts = nullptr)
  {
    Tape<T> tape;
    auto vars = bind(tape, params, false);
    std::optional<Var<T>> pv;
    if (prompts)
      pv = tape.constant(prompts->vectors);
    return Embedding<T>(encode_texts<T>({params.vocab.lookup(tokens)}, vars, pv).value().row_vector(0));
  }
}

#endif
