#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "colorfuse/tensor.hpp"

namespace colorfuse {

struct AdamHyperparameters {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers for one ordered list of parameters.
template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamHyperparameters hp = {}) : hp_(hp) {}

  const AdamHyperparameters& hyperparameters() const noexcept { return hp_; }
  std::uint64_t step_count() const noexcept { return step_; }
  std::span<const T> first_moment(std::size_t param) const { return m_.at(param); }
  std::span<const T> second_moment(std::size_t param) const { return v_.at(param); }

  /// One bias-corrected Adam update of every parameter from its gradient.
  /// The parameter list must be the same (same order and shapes) on every call.
  void step(std::span<Tensor<T>> params);

 private:
  AdamHyperparameters hp_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

extern template class AdamState<float>;
extern template class AdamState<double>;

}  // namespace colorfuse
