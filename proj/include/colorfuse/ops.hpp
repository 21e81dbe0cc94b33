#pragma once

#include <cstddef>
#include <span>

#include "colorfuse/tensor.hpp"

namespace colorfuse {

/// Zero padding that keeps a stride-1 convolution size-preserving.
/// Odd totals put the extra row/column after (bottom/right).
struct SamePadding {
  std::size_t before = 0;
  std::size_t after = 0;
  std::size_t output = 0;
};

SamePadding same_padding(std::size_t input, std::size_t kernel, std::size_t stride);

namespace ops {

/// Cross-correlation of a [C_in,H,W] volume with [C_out,C_in,k,k] kernels plus
/// per-channel bias, zero "same" padding, output [C_out,ceil(H/s),ceil(W/s)].
template <typename T>
Tensor<T> conv2d(Graph<T>& g, const Tensor<T>& input, const Tensor<T>& kernels,
                 const Tensor<T>& bias, std::size_t stride);

template <typename T>
Tensor<T> relu(Graph<T>& g, const Tensor<T>& x);

template <typename T>
Tensor<T> tanh_act(Graph<T>& g, const Tensor<T>& x);

/// [C,H,W] -> [C,2H,2W], each pixel copied into a 2x2 block.
template <typename T>
Tensor<T> upsample_nearest2x(Graph<T>& g, const Tensor<T>& x);

/// Stacks b's channels after a's. Spatial dims must agree.
template <typename T>
Tensor<T> concat_depth(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

/// [D] -> [D,h,w], the vector repeated at every spatial position.
template <typename T>
Tensor<T> tile_spatial(Graph<T>& g, const Tensor<T>& v, std::size_t h, std::size_t w);

/// Per-image chroma loss over [2,H,W] planes:
///   1/(2HW) * sum_k sum_i sum_j (target - pred)^2
template <typename T>
Tensor<T> mse_loss(Graph<T>& g, const Tensor<T>& pred_ab, const Tensor<T>& target_ab);

/// Mean of mse_loss over a batch of images.
template <typename T>
Tensor<T> mse_loss_batch(Graph<T>& g, std::span<const Tensor<T>> preds,
                         std::span<const Tensor<T>> targets);

template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& x);

template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& x, T factor);

/// Elementwise product of equally shaped tensors.
template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise sum of equally shaped tensors.
template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

}  // namespace ops
}  // namespace colorfuse
