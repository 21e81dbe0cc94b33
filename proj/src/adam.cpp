#include "colorfuse/adam.hpp"

#include <cmath>
#include <string>

namespace colorfuse {

template <typename T>
void AdamState<T>::step(std::span<Tensor<T>> params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].requires_grad() || !params[i].has_grad()) {
      throw ContractError("adam: parameter " + std::to_string(i) + " has no gradient");
    }
  }
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.emplace_back(p.size(), T{0});
      v_.emplace_back(p.size(), T{0});
    }
  } else if (m_.size() != params.size()) {
    throw ContractError("adam: parameter list changed between steps");
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double m_correction = 1.0 - std::pow(hp_.beta1, t);
  const double v_correction = 1.0 - std::pow(hp_.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].mutable_data();
    auto grad = params[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    if (m.size() != theta.size()) {
      throw ContractError("adam: parameter " + std::to_string(i) + " changed size");
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = grad[j];
      const double mj = hp_.beta1 * m[j] + (1.0 - hp_.beta1) * g;
      const double vj = hp_.beta2 * v[j] + (1.0 - hp_.beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / m_correction;
      const double v_hat = vj / v_correction;
      theta[j] = static_cast<T>(theta[j] - hp_.learning_rate * m_hat / (std::sqrt(v_hat) + hp_.epsilon));
    }
  }
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace colorfuse
