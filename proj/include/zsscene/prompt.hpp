#ifndef ZSSCENE_PROMPT_HPP
#define ZSSCENE_PROMPT_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "zsscene/core/ops.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene
{
  /// k learnable vectors in token-embedding space, shared by every class.
  /// k = 0 disables prompting.
  template <class T>
  struct PromptBank
  {
    Tensor<T> vectors;

    std::size_t k() const noexcept { return vectors.rows(); }
    std::size_t token_dim() const noexcept { return vectors.cols(); }
  };

  template <class T>
  PromptBank<T> init_prompts(std::size_t k, std::size_t token_dim, SeededRng& rng)
  {
    if (k == 0)
      return PromptBank<T>{Tensor<T>(0, token_dim)};
    return PromptBank<T>{glorot_uniform<T>(k, token_dim, rng)};
  }

  template <class T>
  PromptBank<T> init_prompts(std::size_t k, std::size_t token_dim, std::uint64_t seed)
  {
    SeededRng rng(seed);
    return init_prompts<T>(k, token_dim, rng);
  }

  /// [p_1 .. p_k ; token rows], token rows copied unchanged.
  template <class T>
  Tensor<T> prepend_prompts(const PromptBank<T>& bank, const Tensor<T>& token_embeddings)
  {
    if (bank.k() > 0 && bank.token_dim() != token_embeddings.cols())
      throw ShapeError("prepend_prompts", bank.vectors.rows(), bank.vectors.cols(),
                       token_embeddings.rows(), token_embeddings.cols());
    if (bank.k() == 0)
      return token_embeddings;
    Tensor<T> out(bank.k() + token_embeddings.rows(), token_embeddings.cols());
    auto dst = out.values();
    std::copy(bank.vectors.values().begin(), bank.vectors.values().end(), dst.begin());
    std::copy(token_embeddings.values().begin(), token_embeddings.values().end(),
              dst.begin() + static_cast<std::ptrdiff_t>(bank.vectors.size()));
    return out;
  }

  /// Differentiable form used inside the text encoder.
  template <class T>
  Var<T> prepend_prompts(Var<T> bank, Var<T> token_embeddings)
  {
    if (bank.rows() > 0 && token_embeddings.rows() > 0 && bank.cols() != token_embeddings.cols())
      throw ShapeError("prepend_prompts", bank.rows(), bank.cols(), token_embeddings.rows(),
                       token_embeddings.cols());
    return ops::concat_rows<T>({bank, token_embeddings});
  }
}

#endif
