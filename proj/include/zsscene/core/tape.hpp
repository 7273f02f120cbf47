#ifndef ZSSCENE_CORE_TAPE_HPP
#define ZSSCENE_CORE_TAPE_HPP

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene
{
  template <class T>
  class Tape;

  /// Handle to a value recorded on a Tape. Cheap to copy; only valid while
  /// its tape is alive.
  template <class T>
  struct Var
  {
    Tape<T>* tape = nullptr;
    std::size_t id = 0;

    const Tensor<T>& value() const { return tape->value(*this); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
  };

  /// Reverse-mode computation trace.
  ///
  /// Nodes are appended in evaluation order, so every node's parents have
  /// smaller ids and the node list is already a topological order. A tape is
  /// single-threaded; build one per batch or per record.
  template <class T>
  class Tape
  {
  public:
    using Backward = std::function<void(Tape&, const Tensor<T>& grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> leaf(Tensor<T> value, bool requires_grad = true)
    {
      check_finite("leaf", value);
      nodes_.push_back(Node{std::move(value), requires_grad, {}});
      return Var<T>{this, nodes_.size() - 1};
    }

    Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

    /// Appends the result of an op. `backward` receives the gradient of the
    /// output and must accumulate into the parents through accumulate().
    Var<T> record(std::string_view op, Tensor<T> value, std::initializer_list<Var<T>> parents,
                  Backward backward)
    {
      return record(op, std::move(value), std::vector<Var<T>>(parents), std::move(backward));
    }

    Var<T> record(std::string_view op, Tensor<T> value, const std::vector<Var<T>>& parents,
                  Backward backward)
    {
      check_finite(op, value);
      bool needs = false;
      for (const auto& p : parents) {
        if (p.tape != this)
          throw InvalidArgument(std::string(op) + ": operand recorded on a different tape");
        needs = needs || nodes_[p.id].requires_grad;
      }
      nodes_.push_back(Node{std::move(value), needs, needs ? std::move(backward) : Backward{}});
      return Var<T>{this, nodes_.size() - 1};
    }

    const Tensor<T>& value(Var<T> v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var<T> v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Propagates d(out)/d(node) to every node that requires a gradient.
    /// Gradients from a previous call are discarded.
    void backward(Var<T> out)
    {
      const auto& v = value(out);
      if (v.rows() != 1 || v.cols() != 1)
        throw ShapeError("backward", "output must be a scalar, got " + ShapeError::dims(v.rows(), v.cols()));

      grads_.assign(nodes_.size(), Tensor<T>());
      grads_[out.id] = Tensor<T>(1, 1, T(1));
      for (std::size_t i = out.id + 1; i-- > 0;) {
        auto& node = nodes_[i];
        if (!node.requires_grad || !node.backward || grads_[i].empty())
          continue;
        node.backward(*this, grads_[i]);
      }
    }

    /// Gradient of the last backward() output w.r.t. `v`; zero if none flowed.
    Tensor<T> grad(Var<T> v) const
    {
      const auto& val = value(v);
      if (v.id < grads_.size() && !grads_[v.id].empty())
        return grads_[v.id];
      return Tensor<T>(val.rows(), val.cols());
    }

    void accumulate(Var<T> v, const Tensor<T>& g)
    {
      if (!nodes_[v.id].requires_grad)
        return;
      auto& dst = grads_[v.id];
      if (dst.empty()) {
        dst = g;
        return;
      }
      auto d = dst.values();
      auto s = g.values();
      for (std::size_t i = 0; i != d.size(); ++i)
        d[i] += s[i];
    }

  private:
    struct Node
    {
      Tensor<T> value;
      bool requires_grad = false;
      Backward backward;
    };

    static void check_finite(std::string_view op, const Tensor<T>& t)
    {
      if (!t.all_finite())
        throw NumericError(std::string(op) + ": produced a non-finite value");
    }

    std::deque<Node> nodes_;  // stable addresses: value() references survive later records
    std::vector<Tensor<T>> grads_;
  };
}

#endif
