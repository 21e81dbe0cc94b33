#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "colorfuse/embedding.hpp"
#include "colorfuse/tensor.hpp"

namespace colorfuse {

enum class Stage { encoder, fusion, decoder };
enum class Activation { relu, tanh };

struct LayerSpec {
  Stage stage;
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride;
  Activation activation;
  bool upsample_after;  // nearest-neighbour x2 after the activation

  constexpr std::size_t weight_count() const {
    return out_channels * in_channels * kernel * kernel + out_channels;
  }
};

/// Encoder output depth; the fusion input is this plus kEmbeddingSize.
inline constexpr std::size_t kEncoderDepth = 256;
inline constexpr std::size_t kFusedDepth = kEncoderDepth + kEmbeddingSize;
/// Total spatial reduction of the encoder (three stride-2 layers).
inline constexpr std::size_t kDownsampleFactor = 8;

// clang-format off
inline constexpr std::array<LayerSpec, 14> kLayerSchedule{{
    {Stage::encoder,   1,  64, 3, 2, Activation::relu, false},
    {Stage::encoder,  64, 128, 3, 1, Activation::relu, false},
    {Stage::encoder, 128, 128, 3, 2, Activation::relu, false},
    {Stage::encoder, 128, 256, 3, 1, Activation::relu, false},
    {Stage::encoder, 256, 256, 3, 2, Activation::relu, false},
    {Stage::encoder, 256, 512, 3, 1, Activation::relu, false},
    {Stage::encoder, 512, 512, 3, 1, Activation::relu, false},
    {Stage::encoder, 512, 256, 3, 1, Activation::relu, false},
    {Stage::fusion,  kFusedDepth, 256, 1, 1, Activation::relu, false},
    {Stage::decoder, 256, 128, 3, 1, Activation::relu, true},
    {Stage::decoder, 128,  64, 3, 1, Activation::relu, false},
    {Stage::decoder,  64,  64, 3, 1, Activation::relu, true},
    {Stage::decoder,  64,  32, 3, 1, Activation::relu, false},
    {Stage::decoder,  32,   2, 3, 1, Activation::tanh, true},
}};
// clang-format on

constexpr std::size_t schedule_parameter_count() {
  std::size_t n = 0;
  for (const auto& l : kLayerSchedule) n += l.weight_count();
  return n;
}

inline constexpr std::size_t kParameterCount = 6'574'050;
static_assert(schedule_parameter_count() == kParameterCount);

/// "encoder.0", "fusion.0", "decoder.4", ...
std::string layer_name(std::size_t layer_index);

/// Kernels and biases of every layer in kLayerSchedule, in order.
template <typename T>
class ModelParameters {
 public:
  struct Layer {
    Tensor<T> kernels;  // [out, in, k, k]
    Tensor<T> bias;     // [out]
  };

  /// All-zero parameters with the scheduled shapes.
  ModelParameters();
  explicit ModelParameters(std::vector<Layer> layers);

  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  Layer& layer(std::size_t i) { return layers_.at(i); }
  std::size_t layer_count() const noexcept { return layers_.size(); }

  /// Kernels then bias for each layer: the optimizer's parameter order.
  std::vector<Tensor<T>> tensors() const;
  /// Stable names paired with tensors(): "<layer>.kernels", "<layer>.bias".
  static std::vector<std::string> tensor_names();
  static Shape expected_shape(std::size_t tensor_index);

  std::size_t parameter_count() const;
  void zero_grad();

  /// Deep copy (new storage) at another precision.
  template <typename U>
  ModelParameters<U> cast() const;

 private:
  std::vector<Layer> layers_;
};

/// He-uniform kernels (bound sqrt(6 / fan_in)), zero biases.
template <typename T>
ModelParameters<T> init_parameters(std::uint64_t seed);

/// [1,H,W] normalized luminance -> [256,H/8,W/8]. H and W must be multiples of 8.
template <typename T>
Tensor<T> encoder_forward(Graph<T>& g, const Tensor<T>& luminance, const ModelParameters<T>& p);

/// Tiles the embedding over the encoder grid and stacks it after the encoder
/// channels: [256,h,w] -> [1257,h,w].
template <typename T>
Tensor<T> fuse_features(Graph<T>& g, const Tensor<T>& encoded, const Embedding& emb);

/// fuse_features followed by the 1x1 fusion convolution and ReLU -> [256,h,w].
template <typename T>
Tensor<T> fusion_forward(Graph<T>& g, const Tensor<T>& encoded, const Embedding& emb,
                         const ModelParameters<T>& p);

/// [256,h,w] -> [2,8h,8w] normalized chroma in (-1, 1).
template <typename T>
Tensor<T> decoder_forward(Graph<T>& g, const Tensor<T>& fused, const ModelParameters<T>& p);

/// Luminance [1,H,W] to predicted chroma [2,H,W].
template <typename T>
Tensor<T> model_forward(Graph<T>& g, const Tensor<T>& luminance, const Embedding& emb,
                        const ModelParameters<T>& p);

/// KOAL checkpoint: "KOAL", u32 version 1, u32 tensor count, then per tensor
/// u16 name length, UTF-8 name, u8 rank, u32 dims, float32 payload. All
/// little-endian.
void save_checkpoint(const ModelParameters<float>& p, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_checkpoint(const ModelParameters<float>& p);
ModelParameters<float> load_checkpoint(const std::filesystem::path& path);

extern template class ModelParameters<float>;
extern template class ModelParameters<double>;

}  // namespace colorfuse
