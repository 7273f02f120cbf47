#ifndef ZSSCENE_CORE_OPS_HPP
#define ZSSCENE_CORE_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/tape.hpp"
#include "zsscene/core/tensor.hpp"

// Differentiable ops over Var. Shapes follow the row-vector convention:
// a batch of vectors is an N x d tensor, weights are stored out x in and
// applied with matmul_bt.
namespace zsscene::ops
{
  inline constexpr double kLeakySlope = 0.2;
  inline constexpr double kNormEpsilon = 1e-12;

  namespace detail
  {
    template <class T>
    void same_shape(const char* op, Var<T> a, Var<T> b)
    {
      const auto& x = a.value();
      const auto& y = b.value();
      if (x.rows() != y.rows() || x.cols() != y.cols())
        throw ShapeError(op, x.rows(), x.cols(), y.rows(), y.cols());
    }

    template <class T>
    void nonempty(const char* op, Var<T> a)
    {
      if (a.value().empty())
        throw ShapeError(op, "empty operand");
    }

    template <class T, class F, class D>
    Var<T> unary(const char* op, Var<T> a, F f, D deriv)
    {
      nonempty(op, a);
      const auto& x = a.value();
      Tensor<T> y(x.rows(), x.cols());
      for (std::size_t i = 0; i != x.size(); ++i)
        y[i] = f(x[i]);
      return a.tape->record(op, std::move(y), {a}, [a, deriv](Tape<T>& tape, const Tensor<T>& g) {
        const auto& x = tape.value(a);
        Tensor<T> gi(x.rows(), x.cols());
        for (std::size_t i = 0; i != x.size(); ++i)
          gi[i] = g[i] * deriv(x[i]);
        tape.accumulate(a, gi);
      });
    }
  }

  template <class T>
  Var<T> add(Var<T> a, Var<T> b)
  {
    detail::same_shape("add", a, b);
    Tensor<T> y = a.value();
    const auto& x = b.value();
    for (std::size_t i = 0; i != y.size(); ++i)
      y[i] += x[i];
    return a.tape->record("add", std::move(y), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
      tape.accumulate(a, g);
      tape.accumulate(b, g);
    });
  }

  template <class T>
  Var<T> sub(Var<T> a, Var<T> b)
  {
    detail::same_shape("sub", a, b);
    Tensor<T> y = a.value();
    const auto& x = b.value();
    for (std::size_t i = 0; i != y.size(); ++i)
      y[i] -= x[i];
    return a.tape->record("sub", std::move(y), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
      tape.accumulate(a, g);
      Tensor<T> ng = g;
      for (auto& v : ng.values())
        v = -v;
      tape.accumulate(b, ng);
    });
  }

  /// Elementwise product.
  template <class T>
  Var<T> mul(Var<T> a, Var<T> b)
  {
    detail::same_shape("mul", a, b);
    const auto& x = a.value();
    const auto& z = b.value();
    Tensor<T> y(x.rows(), x.cols());
    for (std::size_t i = 0; i != y.size(); ++i)
      y[i] = x[i] * z[i];
    return a.tape->record("mul", std::move(y), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(a);
      const auto& z = tape.value(b);
      Tensor<T> ga(x.rows(), x.cols()), gb(x.rows(), x.cols());
      for (std::size_t i = 0; i != x.size(); ++i) {
        ga[i] = g[i] * z[i];
        gb[i] = g[i] * x[i];
      }
      tape.accumulate(a, ga);
      tape.accumulate(b, gb);
    });
  }

  template <class T>
  Var<T> scale(Var<T> a, T c)
  {
    Tensor<T> y = a.value();
    for (auto& v : y.values())
      v *= c;
    return a.tape->record("scale", std::move(y), {a}, [a, c](Tape<T>& tape, const Tensor<T>& g) {
      Tensor<T> gi = g;
      for (auto& v : gi.values())
        v *= c;
      tape.accumulate(a, gi);
    });
  }

  /// a * s where s is a 1x1 Var.
  template <class T>
  Var<T> mul_scalar(Var<T> a, Var<T> s)
  {
    const auto& sv = s.value();
    if (sv.rows() != 1 || sv.cols() != 1)
      throw ShapeError("mul_scalar", a.rows(), a.cols(), sv.rows(), sv.cols());
    const T c = sv[0];
    Tensor<T> y = a.value();
    for (auto& v : y.values())
      v *= c;
    return a.tape->record("mul_scalar", std::move(y), {a, s}, [a, s](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(a);
      const T c = tape.value(s)[0];
      Tensor<T> ga(x.rows(), x.cols());
      T gs(0);
      for (std::size_t i = 0; i != x.size(); ++i) {
        ga[i] = g[i] * c;
        gs += g[i] * x[i];
      }
      tape.accumulate(a, ga);
      tape.accumulate(s, Tensor<T>(1, 1, gs));
    });
  }

  /// a + b with the 1 x cols row b broadcast over every row of a.
  template <class T>
  Var<T> add_row(Var<T> a, Var<T> b)
  {
    const auto& x = a.value();
    const auto& r = b.value();
    if (r.rows() != 1 || r.cols() != x.cols())
      throw ShapeError("add_row", x.rows(), x.cols(), r.rows(), r.cols());
    Tensor<T> y = x;
    for (std::size_t i = 0; i != x.rows(); ++i)
      for (std::size_t j = 0; j != x.cols(); ++j)
        y(i, j) += r[j];
    return a.tape->record("add_row", std::move(y), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
      tape.accumulate(a, g);
      Tensor<T> gb(1, g.cols());
      for (std::size_t i = 0; i != g.rows(); ++i)
        for (std::size_t j = 0; j != g.cols(); ++j)
          gb[j] += g(i, j);
      tape.accumulate(b, gb);
    });
  }

  template <class T>
  Var<T> matmul(Var<T> a, Var<T> b)
  {
    const auto& x = a.value();
    const auto& z = b.value();
    if (x.cols() != z.rows() || x.empty() || z.empty())
      throw ShapeError("matmul", x.rows(), x.cols(), z.rows(), z.cols());
    Tensor<T> y(x.rows(), z.cols());
    for (std::size_t i = 0; i != x.rows(); ++i)
      for (std::size_t k = 0; k != x.cols(); ++k) {
        const T xik = x(i, k);
        for (std::size_t j = 0; j != z.cols(); ++j)
          y(i, j) += xik * z(k, j);
      }
    return a.tape->record("matmul", std::move(y), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(a);
      const auto& z = tape.value(b);
      if (tape.requires_grad(a)) {
        Tensor<T> ga(x.rows(), x.cols());
        for (std::size_t i = 0; i != x.rows(); ++i)
          for (std::size_t k = 0; k != x.cols(); ++k) {
            T s(0);
            for (std::size_t j = 0; j != z.cols(); ++j)
              s += g(i, j) * z(k, j);
            ga(i, k) = s;
          }
        tape.accumulate(a, ga);
      }
      if (tape.requires_grad(b)) {
        Tensor<T> gb(z.rows(), z.cols());
        for (std::size_t i = 0; i != x.rows(); ++i)
          for (std::size_t k = 0; k != x.cols(); ++k) {
            const T xik = x(i, k);
            for (std::size_t j = 0; j != z.cols(); ++j)
              gb(k, j) += xik * g(i, j);
          }
        tape.accumulate(b, gb);
      }
    });
  }

  /// a * b^T for a (r x k) and b (c x k).
  template <class T>
  Var<T> matmul_bt(Var<T> a, Var<T> b)
  {
    const auto& x = a.value();
    const auto& z = b.value();
    if (x.cols() != z.cols() || x.empty() || z.empty())
      throw ShapeError("matmul_bt", x.rows(), x.cols(), z.rows(), z.cols());
    Tensor<T> y(x.rows(), z.rows());
    for (std::size_t i = 0; i != x.rows(); ++i)
      for (std::size_t j = 0; j != z.rows(); ++j)
        y(i, j) = dot(x.row_span(i), z.row_span(j));
    return a.tape->record("matmul_bt", std::move(y), {a, b}, [a, b](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(a);
      const auto& z = tape.value(b);
      const std::size_t k = x.cols();
      if (tape.requires_grad(a)) {
        Tensor<T> ga(x.rows(), k);
        for (std::size_t i = 0; i != x.rows(); ++i)
          for (std::size_t j = 0; j != z.rows(); ++j) {
            const T gij = g(i, j);
            for (std::size_t c = 0; c != k; ++c)
              ga(i, c) += gij * z(j, c);
          }
        tape.accumulate(a, ga);
      }
      if (tape.requires_grad(b)) {
        Tensor<T> gb(z.rows(), k);
        for (std::size_t i = 0; i != x.rows(); ++i)
          for (std::size_t j = 0; j != z.rows(); ++j) {
            const T gij = g(i, j);
            for (std::size_t c = 0; c != k; ++c)
              gb(j, c) += gij * x(i, c);
          }
        tape.accumulate(b, gb);
      }
    });
  }

  template <class T>
  Var<T> transpose(Var<T> a)
  {
    const auto& x = a.value();
    Tensor<T> y(x.cols(), x.rows());
    for (std::size_t i = 0; i != x.rows(); ++i)
      for (std::size_t j = 0; j != x.cols(); ++j)
        y(j, i) = x(i, j);
    return a.tape->record("transpose", std::move(y), {a}, [a](Tape<T>& tape, const Tensor<T>& g) {
      Tensor<T> gi(g.cols(), g.rows());
      for (std::size_t i = 0; i != g.rows(); ++i)
        for (std::size_t j = 0; j != g.cols(); ++j)
          gi(j, i) = g(i, j);
      tape.accumulate(a, gi);
    });
  }

  template <class T>
  Var<T> relu(Var<T> a)
  {
    return detail::unary("relu", a, [](T x) { return x > T(0) ? x : T(0); },
                         [](T x) { return x > T(0) ? T(1) : T(0); });
  }

  template <class T>
  Var<T> leaky_relu(Var<T> a, T slope = T(kLeakySlope))
  {
    return detail::unary("leaky_relu", a, [slope](T x) { return x > T(0) ? x : slope * x; },
                         [slope](T x) { return x > T(0) ? T(1) : slope; });
  }

  template <class T>
  Var<T> tanh(Var<T> a)
  {
    return detail::unary("tanh", a, [](T x) { return std::tanh(x); },
                         [](T x) { const T t = std::tanh(x); return T(1) - t * t; });
  }

  template <class T>
  Var<T> sigmoid(Var<T> a)
  {
    auto f = [](T x) {
      if (x >= T(0))
        return T(1) / (T(1) + std::exp(-x));
      const T e = std::exp(x);
      return e / (T(1) + e);
    };
    return detail::unary("sigmoid", a, f, [f](T x) { const T s = f(x); return s * (T(1) - s); });
  }

  template <class T>
  Var<T> exp(Var<T> a)
  {
    return detail::unary("exp", a, [](T x) { return std::exp(x); }, [](T x) { return std::exp(x); });
  }

  template <class T>
  Var<T> log(Var<T> a)
  {
    return detail::unary("log", a, [](T x) { return std::log(x); }, [](T x) { return T(1) / x; });
  }

  /// Normalizes every row to unit Euclidean norm. A row with norm at or
  /// below kNormEpsilon is an error.
  template <class T>
  Var<T> l2norm_rows(Var<T> a)
  {
    detail::nonempty("l2norm", a);
    const auto& x = a.value();
    Tensor<T> y(x.rows(), x.cols());
    std::vector<T> norms(x.rows());
    for (std::size_t i = 0; i != x.rows(); ++i) {
      const T n = l2_norm(x.row_span(i));
      if (!(n > T(kNormEpsilon)))
        throw NumericError("l2norm: row " + std::to_string(i) + " has norm <= 1e-12");
      norms[i] = n;
      for (std::size_t j = 0; j != x.cols(); ++j)
        y(i, j) = x(i, j) / n;
    }
    return a.tape->record("l2norm", std::move(y), {a},
                        [a, norms](Tape<T>& tape, const Tensor<T>& g) {
                          const auto& x = tape.value(a);
                          Tensor<T> gi(x.rows(), x.cols());
                          for (std::size_t i = 0; i != x.rows(); ++i) {
                            const T n = norms[i];
                            T yg(0);
                            for (std::size_t j = 0; j != x.cols(); ++j)
                              yg += x(i, j) / n * g(i, j);
                            for (std::size_t j = 0; j != x.cols(); ++j)
                              gi(i, j) = (g(i, j) - x(i, j) / n * yg) / n;
                          }
                          tape.accumulate(a, gi);
                        });
  }

  /// Row-wise softmax restricted to the listed columns of each row; other
  /// entries are exactly zero. `support[i]` must be nonempty.
  template <class T>
  Var<T> softmax_over(Var<T> a, const std::vector<std::vector<std::size_t>>& support)
  {
    const auto& x = a.value();
    if (support.size() != x.rows())
      throw ShapeError("softmax", "support lists " + std::to_string(support.size())
                       + " rows for a tensor with " + std::to_string(x.rows()));
    Tensor<T> y(x.rows(), x.cols());
    for (std::size_t i = 0; i != x.rows(); ++i) {
      const auto& cols = support[i];
      if (cols.empty())
        throw ShapeError("softmax", "row " + std::to_string(i) + " has empty support");
      T m = -std::numeric_limits<T>::infinity();
      for (auto j : cols) {
        if (j >= x.cols())
          throw ShapeError("softmax", "support column out of range");
        m = std::max(m, x(i, j));
      }
      T z(0);
      for (auto j : cols)
        z += (y(i, j) = std::exp(x(i, j) - m));
      for (auto j : cols)
        y(i, j) /= z;
    }
    Tensor<T> yv = y;
    return a.tape->record("softmax", std::move(y), {a}, [a, yv = std::move(yv)](Tape<T>& tape, const Tensor<T>& g) {
      Tensor<T> gi(yv.rows(), yv.cols());
      for (std::size_t i = 0; i != yv.rows(); ++i) {
        T s(0);
        for (std::size_t j = 0; j != yv.cols(); ++j)
          s += g(i, j) * yv(i, j);
        for (std::size_t j = 0; j != yv.cols(); ++j)
          gi(i, j) = yv(i, j) * (g(i, j) - s);
      }
      tape.accumulate(a, gi);
    });
  }

  template <class T>
  Var<T> softmax_rows(Var<T> a)
  {
    const auto& x = a.value();
    std::vector<std::vector<std::size_t>> all(x.rows());
    for (auto& row : all) {
      row.resize(x.cols());
      for (std::size_t j = 0; j != row.size(); ++j)
        row[j] = j;
    }
    return softmax_over(a, all);
  }

  template <class T>
  Var<T> log_softmax_rows(Var<T> a)
  {
    detail::nonempty("log_softmax", a);
    const auto& x = a.value();
    Tensor<T> y(x.rows(), x.cols());
    Tensor<T> p(x.rows(), x.cols());
    for (std::size_t i = 0; i != x.rows(); ++i) {
      auto r = x.row_span(i);
      const T m = *std::max_element(r.begin(), r.end());
      T z(0);
      for (std::size_t j = 0; j != x.cols(); ++j)
        z += std::exp(x(i, j) - m);
      const T lse = m + std::log(z);
      for (std::size_t j = 0; j != x.cols(); ++j) {
        y(i, j) = x(i, j) - lse;
        p(i, j) = std::exp(y(i, j));
      }
    }
    return a.tape->record("log_softmax", std::move(y), {a}, [a, p = std::move(p)](Tape<T>& tape, const Tensor<T>& g) {
      Tensor<T> gi(p.rows(), p.cols());
      for (std::size_t i = 0; i != p.rows(); ++i) {
        T s(0);
        for (std::size_t j = 0; j != p.cols(); ++j)
          s += g(i, j);
        for (std::size_t j = 0; j != p.cols(); ++j)
          gi(i, j) = g(i, j) - p(i, j) * s;
      }
      tape.accumulate(a, gi);
    });
  }

  template <class T>
  Var<T> sum(Var<T> a)
  {
    detail::nonempty("sum", a);
    T s(0);
    for (auto v : a.value().values())
      s += v;
    return a.tape->record("sum", Tensor<T>(1, 1, s), {a}, [a](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(a);
      tape.accumulate(a, Tensor<T>(x.rows(), x.cols(), g[0]));
    });
  }

  template <class T>
  Var<T> mean(Var<T> a)
  {
    detail::nonempty("mean", a);
    const T n = static_cast<T>(a.value().size());
    return scale(sum(a), T(1) / n);
  }

  /// Column means: (r x c) -> (1 x c).
  template <class T>
  Var<T> mean_rows(Var<T> a)
  {
    detail::nonempty("mean_rows", a);
    const auto& x = a.value();
    Tensor<T> y(1, x.cols());
    for (std::size_t i = 0; i != x.rows(); ++i)
      for (std::size_t j = 0; j != x.cols(); ++j)
        y[j] += x(i, j);
    const T inv = T(1) / static_cast<T>(x.rows());
    for (auto& v : y.values())
      v *= inv;
    return a.tape->record("mean_rows", std::move(y), {a}, [a](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(a);
      const T inv = T(1) / static_cast<T>(x.rows());
      Tensor<T> gi(x.rows(), x.cols());
      for (std::size_t i = 0; i != x.rows(); ++i)
        for (std::size_t j = 0; j != x.cols(); ++j)
          gi(i, j) = g[j] * inv;
      tape.accumulate(a, gi);
    });
  }

  template <class T>
  Var<T> gather_rows(Var<T> table, const std::vector<std::size_t>& idx)
  {
    const auto& x = table.value();
    if (idx.empty())
      throw ShapeError("gather_rows", "empty index list");
    Tensor<T> y(idx.size(), x.cols());
    for (std::size_t i = 0; i != idx.size(); ++i) {
      if (idx[i] >= x.rows())
        throw ShapeError("gather_rows", "row index " + std::to_string(idx[i]) + " out of range for "
                         + ShapeError::dims(x.rows(), x.cols()));
      std::copy_n(x.row_span(idx[i]).begin(), x.cols(), y.row_span(i).begin());
    }
    return table.tape->record("gather_rows", std::move(y), {table}, [table, idx](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(table);
      Tensor<T> gi(x.rows(), x.cols());
      for (std::size_t i = 0; i != idx.size(); ++i)
        for (std::size_t j = 0; j != x.cols(); ++j)
          gi(idx[i], j) += g(i, j);
      tape.accumulate(table, gi);
    });
  }

  /// Stacks the rows of each part in order. Zero-row parts are skipped.
  template <class T>
  Var<T> concat_rows(const std::vector<Var<T>>& parts)
  {
    std::vector<Var<T>> used;
    std::size_t rows = 0, cols = 0;
    for (const auto& p : parts) {
      if (p.rows() == 0)
        continue;
      if (!used.empty() && p.cols() != cols)
        throw ShapeError("concat_rows", rows, cols, p.rows(), p.cols());
      cols = p.cols();
      rows += p.rows();
      used.push_back(p);
    }
    if (used.empty())
      throw ShapeError("concat_rows", "no nonempty parts");
    Tensor<T> y(rows, cols);
    std::size_t r = 0;
    for (const auto& p : used) {
      const auto& x = p.value();
      std::copy(x.values().begin(), x.values().end(), y.values().begin() + r * cols);
      r += x.rows();
    }
    return used.front().tape->record("concat_rows", std::move(y), used, [used](Tape<T>& tape, const Tensor<T>& g) {
      std::size_t r = 0;
      for (const auto& p : used) {
        const auto& x = tape.value(p);
        std::vector<T> part(g.values().begin() + r * x.cols(), g.values().begin() + (r + x.rows()) * x.cols());
        tape.accumulate(p, Tensor<T>(x.rows(), x.cols(), std::move(part)));
        r += x.rows();
      }
    });
  }

  /// Rows [begin, end).
  template <class T>
  Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t end)
  {
    const auto& x = a.value();
    if (begin >= end || end > x.rows())
      throw ShapeError("slice_rows", "range [" + std::to_string(begin) + "," + std::to_string(end)
                       + ") invalid for " + ShapeError::dims(x.rows(), x.cols()));
    std::vector<T> part(x.values().begin() + begin * x.cols(), x.values().begin() + end * x.cols());
    return a.tape->record("slice_rows", Tensor<T>(end - begin, x.cols(), std::move(part)), {a},
                          [a, begin](Tape<T>& tape, const Tensor<T>& g) {
                            const auto& x = tape.value(a);
                            Tensor<T> gi(x.rows(), x.cols());
                            std::copy(g.values().begin(), g.values().end(), gi.values().begin() + begin * x.cols());
                            tape.accumulate(a, gi);
                          });
  }

  /// y(i, j) = u(i) + v(j) for column vectors u (r x 1) and v (c x 1).
  template <class T>
  Var<T> outer_add(Var<T> u, Var<T> v)
  {
    const auto& x = u.value();
    const auto& z = v.value();
    if (x.cols() != 1 || z.cols() != 1)
      throw ShapeError("outer_add", x.rows(), x.cols(), z.rows(), z.cols());
    Tensor<T> y(x.rows(), z.rows());
    for (std::size_t i = 0; i != x.rows(); ++i)
      for (std::size_t j = 0; j != z.rows(); ++j)
        y(i, j) = x[i] + z[j];
    return u.tape->record("outer_add", std::move(y), {u, v}, [u, v](Tape<T>& tape, const Tensor<T>& g) {
      Tensor<T> gu(g.rows(), 1), gv(g.cols(), 1);
      for (std::size_t i = 0; i != g.rows(); ++i)
        for (std::size_t j = 0; j != g.cols(); ++j) {
          gu[i] += g(i, j);
          gv[j] += g(i, j);
        }
      tape.accumulate(u, gu);
      tape.accumulate(v, gv);
    });
  }

  /// Picks a(i, cols[i]) for every row: (r x c) -> (r x 1).
  template <class T>
  Var<T> pick(Var<T> a, const std::vector<std::size_t>& cols)
  {
    const auto& x = a.value();
    if (cols.size() != x.rows())
      throw ShapeError("pick", "need one column per row");
    Tensor<T> y(x.rows(), 1);
    for (std::size_t i = 0; i != x.rows(); ++i) {
      if (cols[i] >= x.cols())
        throw ShapeError("pick", "column index out of range");
      y[i] = x(i, cols[i]);
    }
    return a.tape->record("pick", std::move(y), {a}, [a, cols](Tape<T>& tape, const Tensor<T>& g) {
      const auto& x = tape.value(a);
      Tensor<T> gi(x.rows(), x.cols());
      for (std::size_t i = 0; i != x.rows(); ++i)
        gi(i, cols[i]) = g[i];
      tape.accumulate(a, gi);
    });
  }

  template <class T>
  Var<T> diag(Var<T> a)
  {
    const auto& x = a.value();
    if (x.rows() != x.cols())
      throw ShapeError("diag", x.rows(), x.cols(), x.cols(), x.rows());
    std::vector<std::size_t> cols(x.rows());
    for (std::size_t i = 0; i != cols.size(); ++i)
      cols[i] = i;
    return pick(a, cols);
  }
}

#endif
