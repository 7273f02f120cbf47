#ifndef ZSSCENE_CORE_GRAD_CHECK_HPP
#define ZSSCENE_CORE_GRAD_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/tape.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene
{
  /// Builds a scalar on `tape` from the parameter leaves, in order.
  template <class T>
  using ScalarFn = std::function<Var<T>(Tape<T>&, std::span<const Var<T>>)>;

  /// Max over every parameter entry of
  ///   |analytic - central difference| / max(1, |central difference|).
  template <class T>
  T grad_check(const ScalarFn<T>& f, const std::vector<Tensor<T>>& params, T eps)
  {
    if (!(eps > T(0)))
      throw InvalidArgument("grad_check: step must be positive");

    auto evaluate = [&](const std::vector<Tensor<T>>& ps) {
      Tape<T> tape;
      std::vector<Var<T>> leaves;
      for (const auto& p : ps)
        leaves.push_back(tape.constant(p));
      return f(tape, leaves).value().item();
    };

    std::vector<Tensor<T>> analytic;
    {
      Tape<T> tape;
      std::vector<Var<T>> leaves;
      for (const auto& p : params)
        leaves.push_back(tape.leaf(p, true));
      auto out = f(tape, leaves);
      tape.backward(out);
      for (const auto& l : leaves)
        analytic.push_back(tape.grad(l));
    }

    T worst(0);
    std::vector<Tensor<T>> probe = params;
    for (std::size_t p = 0; p != params.size(); ++p) {
      for (std::size_t i = 0; i != params[p].size(); ++i) {
        const T orig = params[p][i];
        probe[p][i] = orig + eps;
        const T up = evaluate(probe);
        probe[p][i] = orig - eps;
        const T down = evaluate(probe);
        probe[p][i] = orig;
        const T numeric = (up - down) / (T(2) * eps);
        const T err = std::abs(analytic[p][i] - numeric) / std::max(T(1), std::abs(numeric));
        worst = std::max(worst, err);
      }
    }
    return worst;
  }
}

#endif
