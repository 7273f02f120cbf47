#ifndef ZSSCENE_CORE_ADAM_HPP
#define ZSSCENE_CORE_ADAM_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene
{
  struct AdamConfig
  {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  /// Adam with bias correction. Moments are sized lazily on the first step
  /// and indexed by parameter position, so the parameter list must keep the
  /// same order across steps.
  template <class T>
  class Adam
  {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>>& grads)
    {
      if (params.size() != grads.size())
        throw InvalidArgument("adam: parameter and gradient counts differ");
      if (m_.empty()) {
        for (auto* p : params) {
          m_.emplace_back(p->rows(), p->cols());
          v_.emplace_back(p->rows(), p->cols());
        }
      }
      if (m_.size() != params.size())
        throw InvalidArgument("adam: parameter list changed between steps");

      ++t_;
      const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
      for (std::size_t k = 0; k != params.size(); ++k) {
        auto& p = *params[k];
        const auto& g = grads[k];
        if (g.size() != p.size())
          throw ShapeError("adam", p.rows(), p.cols(), g.rows(), g.cols());
        for (std::size_t i = 0; i != p.size(); ++i) {
          const double gi = g[i];
          double m = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * gi;
          double v = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * gi * gi;
          m_[k][i] = m;
          v_[k][i] = v;
          const double update = cfg_.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg_.epsilon);
          p[i] = static_cast<T>(p[i] - update);
        }
      }
    }

    std::size_t steps() const noexcept { return t_; }

  private:
    AdamConfig cfg_;
    std::vector<Tensor<double>> m_;
    std::vector<Tensor<double>> v_;
    std::size_t t_ = 0;
  };
}

#endif
