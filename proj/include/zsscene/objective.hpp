#ifndef ZSSCENE_OBJECTIVE_HPP
#define ZSSCENE_OBJECTIVE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "zsscene/core/error.hpp"
#include "zsscene/core/ops.hpp"
#include "zsscene/core/tape.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene
{
  inline constexpr double kContrastiveNormTolerance = 1e-4;

  /// Temperature is held as log(tau) so it stays positive under any update.
  struct ContrastiveConfig
  {
    double log_tau = std::log(0.07);
    bool symmetric = false;
    bool trainable_temperature = true;

    double tau() const { return std::exp(log_tau); }
  };

  template <class T>
  T cosine_similarity(std::span<const T> x, std::span<const T> y)
  {
    if (x.size() != y.size())
      throw ShapeError("cosine_similarity", 1, x.size(), 1, y.size());
    const T nx = l2_norm(x), ny = l2_norm(y);
    if (!(nx > T(0)) || !(ny > T(0)))
      throw InvalidArgument("cosine_similarity: zero-norm input");
    const T c = dot(x, y) / (nx * ny);
    return std::clamp(c, T(-1), T(1));
  }

  /// Entry (i, j) = cosine_similarity(V_i, T_j).
  template <class T>
  Tensor<T> similarity_matrix(const Tensor<T>& v, const Tensor<T>& t)
  {
    if (v.cols() != t.cols() || v.rows() == 0 || t.rows() == 0)
      throw ShapeError("similarity_matrix", v.rows(), v.cols(), t.rows(), t.cols());
    Tensor<T> s(v.rows(), t.rows());
    for (std::size_t i = 0; i != v.rows(); ++i)
      for (std::size_t j = 0; j != t.rows(); ++j)
        s(i, j) = cosine_similarity(v.row_span(i), t.row_span(j));
    return s;
  }

  namespace detail
  {
    template <class T>
    void require_unit_rows(const char* what, const Tensor<T>& x)
    {
      for (std::size_t i = 0; i != x.rows(); ++i) {
        const double n = static_cast<double>(l2_norm(x.row_span(i)));
        if (std::abs(n - 1.0) > kContrastiveNormTolerance)
          throw InvalidArgument(std::string("contrastive_loss: ") + what + " row " + std::to_string(i)
                                + " is not unit-norm (norm " + std::to_string(n) + ")");
      }
    }
  }

  /// Temperature-scaled contrastive loss over a batch of matched pairs.
  ///
  /// Image->text direction: mean_i -log softmax_j(sim(v_i, t_j) / tau)[i].
  /// With `symmetric`, the mean of that and the text->image direction.
  /// Rows of `v` and `t` must already be unit-norm, so sim is a dot product.
  template <class T>
  Var<T> contrastive_loss(Var<T> v, Var<T> t, Var<T> log_tau, bool symmetric)
  {
    if (v.rows() != t.rows() || v.cols() != t.cols() || v.rows() == 0)
      throw ShapeError("contrastive_loss", v.rows(), v.cols(), t.rows(), t.cols());
    detail::require_unit_rows("image", v.value());
    detail::require_unit_rows("text", t.value());

    auto inv_tau = ops::exp(ops::scale(log_tau, T(-1)));
    auto logits = ops::mul_scalar(ops::matmul_bt(v, t), inv_tau);
    auto i2t = ops::scale(ops::mean(ops::diag(ops::log_softmax_rows(logits))), T(-1));
    if (!symmetric)
      return i2t;
    auto t2i = ops::scale(ops::mean(ops::diag(ops::log_softmax_rows(ops::transpose(logits)))), T(-1));
    return ops::scale(ops::add(i2t, t2i), T(0.5));
  }

  template <class T>
  T contrastive_loss(const Tensor<T>& v, const Tensor<T>& t, const ContrastiveConfig& cfg)
  {
    Tape<T> tape;
    auto out = contrastive_loss(tape.constant(v), tape.constant(t),
                                tape.constant(Tensor<T>::scalar(static_cast<T>(cfg.log_tau))), cfg.symmetric);
    return out.value().item();
  }
}

#endif
