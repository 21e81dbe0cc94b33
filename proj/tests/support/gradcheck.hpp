#pragma once

// Central finite-difference oracle for the tensor engine. Runs entirely in
// double precision and only evaluates forward passes for the numeric side.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "colorfuse/tensor.hpp"

namespace colorfuse::testing {

using ScalarFn = std::function<Tensor<double>(Graph<double>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "<input>[<index>] analytic=.. numeric=.."
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// gradient is zero from dividing rounding noise by zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares backward() against (f(x+h) - f(x-h)) / 2h for `inputs`, which
/// must be leaves that `loss` closes over. When `coords_per_input` is set,
/// each input checks its largest-|gradient| coordinates plus random ones;
/// otherwise every coordinate.
inline GradCheckResult check_gradients(const ScalarFn& loss, std::vector<Tensor<double>> inputs,
                                       double step = 1e-5, std::size_t coords_per_input = 0,
                                       std::uint64_t seed = 1) {
  for (auto& t : inputs) t.zero_grad();
  {
    Graph<double> g;
    g.backward(loss(g));
  }
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor<double>& t = inputs[k];
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    std::vector<std::size_t> coords(t.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords_per_input && coords_per_input < coords.size()) {
      std::partial_sort(coords.begin(), coords.begin() + 2, coords.end(),
                        [&](std::size_t a, std::size_t b) {
                          return std::abs(analytic[a]) > std::abs(analytic[b]);
                        });
      std::vector<std::size_t> pick(coords.begin(), coords.begin() + 2);
      while (pick.size() < coords_per_input) pick.push_back(rng() % t.size());
      coords = pick;
    }
    for (std::size_t i : coords) {
      const double original = t.data()[i];
      t.mutable_data()[i] = original + step;
      Graph<double> gp(GradMode::disabled);
      const double plus = loss(gp).item();
      t.mutable_data()[i] = original - step;
      Graph<double> gm(GradMode::disabled);
      const double minus = loss(gm).item();
      t.mutable_data()[i] = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = relative_error(analytic[i], numeric);
      ++result.coordinates;
      if (err >= result.max_relative_error) {
        result.max_relative_error = err;
        result.worst = "input " + std::to_string(k) + "[" + std::to_string(i) +
                       "] analytic=" + std::to_string(analytic[i]) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return result;
}

/// Uniform values in [lo, hi) with magnitude at least `min_abs` (keeps
/// ReLU inputs away from the kink).
inline Tensor<double> random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0,
                                    double hi = 1.0, double min_abs = 0.0,
                                    bool requires_grad = true) {
  std::vector<double> v(element_count(shape));
  for (auto& x : v) {
    do {
      x = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    } while (std::abs(x) < min_abs);
  }
  return Tensor<double>::from_data(std::move(shape), std::move(v), requires_grad);
}

}  // namespace colorfuse::testing
