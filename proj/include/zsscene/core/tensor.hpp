#ifndef ZSSCENE_CORE_TENSOR_HPP
#define ZSSCENE_CORE_TENSOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "zsscene/core/error.hpp"

namespace zsscene
{
  /// Dense row-major matrix. Vectors are 1xN rows and scalars are 1x1.
  ///
  /// A zero-row tensor is allowed as an empty container (an empty prompt
  /// bank); no arithmetic op accepts one.
  template <class T>
  class Tensor
  {
  public:
    using value_type = T;

    Tensor() = default;

    Tensor(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Tensor(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), data_(std::move(values))
    {
      if (data_.size() != rows_ * cols_)
        throw ShapeError("tensor", "value count " + std::to_string(data_.size())
                         + " does not match shape " + ShapeError::dims(rows_, cols_));
    }

    static Tensor row(std::vector<T> values)
    {
      const auto n = values.size();
      return Tensor(1, n, std::move(values));
    }

    static Tensor scalar(T v) { return Tensor(1, 1, v); }

    static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows)
    {
      const std::size_t r = rows.size();
      const std::size_t c = r ? rows.begin()->size() : 0;
      std::vector<T> values;
      values.reserve(r * c);
      for (const auto& line : rows) {
        if (line.size() != c)
          throw ShapeError("tensor", "ragged row list");
        values.insert(values.end(), line.begin(), line.end());
      }
      return Tensor(r, c, std::move(values));
    }

    static Tensor identity(std::size_t n)
    {
      Tensor t(n, n);
      for (std::size_t i = 0; i != n; ++i)
        t(i, i) = T(1);
      return t;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    std::array<std::size_t, 2> shape() const noexcept { return {rows_, cols_}; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    std::span<T> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T> row_vector(std::size_t r) const
    {
      auto s = row_span(r);
      return {s.begin(), s.end()};
    }

    T item() const
    {
      if (rows_ != 1 || cols_ != 1)
        throw ShapeError("item", "expected a 1x1 tensor, got " + ShapeError::dims(rows_, cols_));
      return data_[0];
    }

    bool all_finite() const
    {
      return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    template <class U>
    Tensor<U> cast() const
    {
      std::vector<U> out(data_.begin(), data_.end());
      return Tensor<U>(rows_, cols_, std::move(out));
    }

    friend bool operator==(const Tensor& a, const Tensor& b)
    {
      return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
  };

  template <class X, class Y>
  auto dot(const X& x, const Y& y)
  {
    typename X::value_type s(0);
    for (std::size_t i = 0; i != x.size(); ++i)
      s += x[i] * y[i];
    return s;
  }

  template <class X>
  auto l2_norm(const X& x)
  {
    return std::sqrt(dot(x, x));
  }
}

#endif
