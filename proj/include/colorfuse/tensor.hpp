#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colorfuse/error.hpp"

namespace colorfuse {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class Graph;

/// Dense row-major tensor. Copies share storage: a Tensor is a handle, and
/// tensors produced by an operation are never modified afterwards except for
/// their gradient buffer.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, T value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<const T> data() const { return impl_->data; }
  /// Direct write access. Only parameters (optimizer, loader) and freshly
  /// built inputs should be written through this.
  std::span<T> mutable_data() { return impl_->data; }

  T item() const;
  T at(std::size_t c, std::size_t y, std::size_t x) const;

  bool requires_grad() const { return impl_->requires_grad; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad() { return impl_->grad; }

  /// Allocates (if needed) and clears the gradient buffer. Throws for tensors
  /// that do not require gradients.
  void zero_grad();

  /// Adds `g` into the gradient buffer, allocating it on first use.
  void accumulate_grad(std::span<const T> g);

  /// Copy of the values without gradient tracking.
  Tensor detached_copy() const;

  /// True when both handles refer to the same storage.
  bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  explicit Tensor(std::shared_ptr<Storage> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<Storage> impl_;

  friend class Graph<T>;
};

enum class GradMode { enabled, disabled };

/// Define-by-run record of executed operations. Operations append themselves
/// in execution order, so inputs always precede their consumers and a single
/// reverse sweep visits every operation once.
template <typename T>
class Graph {
 public:
  using BackwardRule = std::function<void(const Tensor<T>& output)>;

  explicit Graph(GradMode mode = GradMode::enabled) : mode_(mode) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  bool recording() const noexcept { return mode_ == GradMode::enabled; }

  /// Creates the output tensor of an operation. The output tracks gradients
  /// iff the graph records and any input does.
  Tensor<T> make_output(Shape shape, std::initializer_list<const Tensor<T>*> inputs);

  /// Registers `rule` for `output` if `output` tracks gradients.
  void record(std::string_view op, std::vector<Tensor<T>> inputs, const Tensor<T>& output,
              BackwardRule rule);

  std::size_t operation_count() const noexcept { return nodes_.size(); }
  std::string_view operation_name(std::size_t i) const { return nodes_.at(i).op; }

  /// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
  /// reachable tensor that tracks them; leaves keep their sums across calls
  /// until zero_grad().
  void backward(const Tensor<T>& loss);

  /// Drops every record (and the activations they keep alive).
  void clear() noexcept { nodes_.clear(); }

 private:
  struct Node {
    std::string_view op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    BackwardRule rule;
  };

  GradMode mode_;
  std::vector<Node> nodes_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Graph<float>;
extern template class Graph<double>;

/// Casts values into a new tensor of another precision (no gradient link).
template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t, bool requires_grad = false) {
  std::vector<To> values(t.data().begin(), t.data().end());
  return Tensor<To>::from_data(t.shape(), std::move(values), requires_grad);
}

}  // namespace colorfuse
