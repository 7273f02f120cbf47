#ifndef ZSSCENE_CORE_RNG_HPP
#define ZSSCENE_CORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "zsscene/core/tensor.hpp"

namespace zsscene
{
  /// Seeded random stream that is identical across platforms.
  ///
  /// std::mt19937_64 is fully specified by the standard, the distributions in
  /// <random> are not, so every real-valued draw is derived here from the raw
  /// 64-bit outputs.
  class SeededRng
  {
  public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) by rejection; n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
      const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
      std::uint64_t x;
      do {
        x = engine_();
      } while (x >= limit);
      return x % n;
    }

    /// Standard normal via Box-Muller.
    double normal()
    {
      if (has_spare_) {
        has_spare_ = false;
        return spare_;
      }
      double u1;
      do {
        u1 = uniform();
      } while (u1 <= 0.0);
      const double u2 = uniform();
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double t = 2.0 * std::numbers::pi * u2;
      spare_ = r * std::sin(t);
      has_spare_ = true;
      return r * std::cos(t);
    }

    template <class It>
    void shuffle(It first, It last)
    {
      const auto n = static_cast<std::uint64_t>(last - first);
      for (std::uint64_t i = n; i > 1; --i)
        std::swap(first[i - 1], first[below(i)]);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
  };

  /// Glorot-uniform initialization for a rows x cols weight; fan-in and
  /// fan-out are the two dimensions.
  template <class T>
  Tensor<T> glorot_uniform(std::size_t rows, std::size_t cols, SeededRng& rng)
  {
    Tensor<T> t(rows, cols);
    if (t.empty())
      return t;
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (auto& v : t.values())
      v = static_cast<T>(rng.uniform(-limit, limit));
    return t;
  }
}

#endif
