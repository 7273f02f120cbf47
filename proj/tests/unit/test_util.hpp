#ifndef ZSSCENE_TEST_UTIL_HPP
#define ZSSCENE_TEST_UTIL_HPP

#include <cmath>
#include <vector>

#include "zsscene/core/rng.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene::testing
{
  inline Tensor<double> random_tensor(std::size_t r, std::size_t c, SeededRng& rng, double lo = -1.0, double hi = 1.0)
  {
    Tensor<double> t(r, c);
    for (auto& v : t.values())
      v = rng.uniform(lo, hi);
    return t;
  }

  inline Tensor<double> random_unit_rows(std::size_t r, std::size_t c, SeededRng& rng)
  {
    Tensor<double> t(r, c);
    for (std::size_t i = 0; i != r; ++i) {
      double n = 0;
      for (auto& v : t.row_span(i)) {
        v = rng.normal();
        n += v * v;
      }
      n = std::sqrt(n);
      for (auto& v : t.row_span(i))
        v /= n;
    }
    return t;
  }
}

#endif
