#include "colorfuse/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace colorfuse {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), T{0}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::filled(Shape shape, T value, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return from_data(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
  if (element_count(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  }
  auto impl = std::make_shared<Storage>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->data.size(), T{0});
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from_data(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + to_string(shape()));
  }
  return impl_->data[0];
}

template <typename T>
T Tensor<T>::at(std::size_t c, std::size_t y, std::size_t x) const {
  const Shape& s = shape();
  if (s.size() != 3 || c >= s[0] || y >= s[1] || x >= s[2]) {
    throw ShapeError("index out of range for shape " + to_string(s));
  }
  return impl_->data[(c * s[1] + y) * s[2] + x];
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!impl_->requires_grad) {
    throw ContractError("zero_grad() on a tensor that does not require gradients");
  }
  impl_->grad.assign(impl_->data.size(), T{0});
}

template <typename T>
void Tensor<T>::accumulate_grad(std::span<const T> g) {
  if (g.size() != impl_->data.size()) {
    throw ShapeError("gradient length " + std::to_string(g.size()) + " does not match shape " +
                     to_string(shape()));
  }
  auto& grad = impl_->grad;
  if (grad.empty()) {
    grad.assign(g.begin(), g.end());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

template <typename T>
Tensor<T> Tensor<T>::detached_copy() const {
  return from_data(shape(), impl_->data, false);
}

template <typename T>
Tensor<T> Graph<T>::make_output(Shape shape, std::initializer_list<const Tensor<T>*> inputs) {
  const bool tracked =
      recording() && std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor<T>* t) { return t->requires_grad(); });
  auto impl = std::make_shared<typename Tensor<T>::Storage>();
  impl->data.assign(element_count(shape), T{0});
  impl->shape = std::move(shape);
  impl->requires_grad = tracked;
  return Tensor<T>(std::move(impl));
}

template <typename T>
void Graph<T>::record(std::string_view op, std::vector<Tensor<T>> inputs,
                      const Tensor<T>& output, BackwardRule rule) {
  if (!recording() || !output.requires_grad()) return;
  nodes_.push_back(Node{op, std::move(inputs), output, std::move(rule)});
}

template <typename T>
void Graph<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward() on a loss that no recorded operation produced");
  }
  const auto produced = std::find_if(nodes_.begin(), nodes_.end(), [&](const Node& n) {
    return n.output.same_storage(loss);
  });
  if (produced == nodes_.end()) {
    throw ContractError("backward() on a loss that this graph did not record");
  }

  // Intermediate gradients start empty; an empty buffer marks an operation
  // unreachable from the loss.
  for (Node& n : nodes_) n.output.impl_->grad.clear();
  const T one{1};
  Tensor<T>(loss).accumulate_grad(std::span<const T>(&one, 1));

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->rule(it->output);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace colorfuse
