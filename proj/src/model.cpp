#include "colorfuse/model.hpp"

#include <cmath>

#include "colorfuse/ops.hpp"
#include "colorfuse/random.hpp"

namespace colorfuse {

std::string layer_name(std::size_t layer_index) {
  std::size_t ordinal = 0;
  for (std::size_t i = 0; i < layer_index; ++i) {
    if (kLayerSchedule.at(i).stage == kLayerSchedule.at(layer_index).stage) ++ordinal;
  }
  switch (kLayerSchedule.at(layer_index).stage) {
    case Stage::encoder:
      return "encoder." + std::to_string(ordinal);
    case Stage::fusion:
      return "fusion." + std::to_string(ordinal);
    case Stage::decoder:
      return "decoder." + std::to_string(ordinal);
  }
  return {};
}

template <typename T>
ModelParameters<T>::ModelParameters() {
  layers_.reserve(kLayerSchedule.size());
  for (const auto& spec : kLayerSchedule) {
    layers_.push_back(
        {Tensor<T>::zeros(Shape{spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}, true),
         Tensor<T>::zeros(Shape{spec.out_channels}, true)});
  }
}

template <typename T>
ModelParameters<T>::ModelParameters(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.size() != kLayerSchedule.size()) {
    throw ShapeError("model needs " + std::to_string(kLayerSchedule.size()) + " layers, got " +
                     std::to_string(layers_.size()));
  }
  const auto names = tensor_names();
  const auto ts = tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!ts[i].defined() || ts[i].shape() != expected_shape(i)) {
      throw ShapeError(names[i] + ": expected shape " + to_string(expected_shape(i)) + ", got " +
                       (ts[i].defined() ? to_string(ts[i].shape()) : std::string("nothing")));
    }
    if (!ts[i].requires_grad()) throw ContractError(names[i] + " must require gradients");
  }
  if (parameter_count() != kParameterCount) {
    throw ShapeError("parameter count " + std::to_string(parameter_count()) + " != " +
                     std::to_string(kParameterCount));
  }
}

template <typename T>
std::vector<Tensor<T>> ModelParameters<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(2 * layers_.size());
  for (const auto& l : layers_) {
    out.push_back(l.kernels);
    out.push_back(l.bias);
  }
  return out;
}

template <typename T>
std::vector<std::string> ModelParameters<T>::tensor_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kLayerSchedule.size(); ++i) {
    names.push_back(layer_name(i) + ".kernels");
    names.push_back(layer_name(i) + ".bias");
  }
  return names;
}

template <typename T>
Shape ModelParameters<T>::expected_shape(std::size_t tensor_index) {
  const LayerSpec& s = kLayerSchedule.at(tensor_index / 2);
  if (tensor_index % 2 == 0) return {s.out_channels, s.in_channels, s.kernel, s.kernel};
  return {s.out_channels};
}

template <typename T>
std::size_t ModelParameters<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.kernels.size() + l.bias.size();
  return n;
}

template <typename T>
void ModelParameters<T>::zero_grad() {
  for (auto& l : layers_) {
    l.kernels.zero_grad();
    l.bias.zero_grad();
  }
}

template <typename T>
template <typename U>
ModelParameters<U> ModelParameters<T>::cast() const {
  std::vector<typename ModelParameters<U>::Layer> layers;
  layers.reserve(layers_.size());
  for (const auto& l : layers_) {
    layers.push_back({tensor_cast<U>(l.kernels, true), tensor_cast<U>(l.bias, true)});
  }
  return ModelParameters<U>(std::move(layers));
}

template <typename T>
ModelParameters<T> init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  ModelParameters<T> p;
  for (std::size_t i = 0; i < kLayerSchedule.size(); ++i) {
    const LayerSpec& s = kLayerSchedule[i];
    const double fan_in = static_cast<double>(s.in_channels * s.kernel * s.kernel);
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : p.layer(i).kernels.mutable_data()) {
      v = static_cast<T>(uniform(rng, -bound, bound));
    }
  }
  return p;
}

namespace {

template <typename T>
Tensor<T> apply_layer(Graph<T>& g, const Tensor<T>& x, const ModelParameters<T>& p,
                      std::size_t index) {
  const LayerSpec& s = kLayerSchedule[index];
  const auto& l = p.layer(index);
  Tensor<T> y = ops::conv2d(g, x, l.kernels, l.bias, s.stride);
  y = s.activation == Activation::relu ? ops::relu(g, y) : ops::tanh_act(g, y);
  if (s.upsample_after) y = ops::upsample_nearest2x(g, y);
  return y;
}

}  // namespace

template <typename T>
Tensor<T> encoder_forward(Graph<T>& g, const Tensor<T>& luminance, const ModelParameters<T>& p) {
  if (luminance.rank() != 3 || luminance.dim(0) != 1) {
    throw ShapeError("encoder expects [1,H,W] luminance, got " + to_string(luminance.shape()));
  }
  const std::size_t h = luminance.dim(1), w = luminance.dim(2);
  if (h == 0 || w == 0 || h % kDownsampleFactor || w % kDownsampleFactor) {
    throw InputError("luminance " + std::to_string(h) + "x" + std::to_string(w) +
                     " is not a positive multiple of 8 in both dimensions");
  }
  Tensor<T> x = luminance;
  for (std::size_t i = 0; i < kLayerSchedule.size(); ++i) {
    if (kLayerSchedule[i].stage == Stage::encoder) x = apply_layer(g, x, p, i);
  }
  return x;
}

template <typename T>
Tensor<T> fuse_features(Graph<T>& g, const Tensor<T>& encoded, const Embedding& emb) {
  if (encoded.rank() != 3 || encoded.dim(0) != kEncoderDepth) {
    throw ShapeError("fusion expects [256,h,w] features, got " + to_string(encoded.shape()));
  }
  if (emb.size() != kEmbeddingSize) {
    throw InputError("embedding length " + std::to_string(emb.size()) + ", expected " +
                     std::to_string(kEmbeddingSize));
  }
  const auto v = Tensor<T>::from_data(Shape{kEmbeddingSize},
                                      std::vector<T>(emb.values().begin(), emb.values().end()));
  const Tensor<T> tiled = ops::tile_spatial(g, v, encoded.dim(1), encoded.dim(2));
  return ops::concat_depth(g, encoded, tiled);
}

template <typename T>
Tensor<T> fusion_forward(Graph<T>& g, const Tensor<T>& encoded, const Embedding& emb,
                         const ModelParameters<T>& p) {
  Tensor<T> x = fuse_features(g, encoded, emb);
  for (std::size_t i = 0; i < kLayerSchedule.size(); ++i) {
    if (kLayerSchedule[i].stage == Stage::fusion) x = apply_layer(g, x, p, i);
  }
  return x;
}

template <typename T>
Tensor<T> decoder_forward(Graph<T>& g, const Tensor<T>& fused, const ModelParameters<T>& p) {
  if (fused.rank() != 3 || fused.dim(0) != kEncoderDepth) {
    throw ShapeError("decoder expects [256,h,w] features, got " + to_string(fused.shape()));
  }
  Tensor<T> x = fused;
  for (std::size_t i = 0; i < kLayerSchedule.size(); ++i) {
    if (kLayerSchedule[i].stage == Stage::decoder) x = apply_layer(g, x, p, i);
  }
  return x;
}

template <typename T>
Tensor<T> model_forward(Graph<T>& g, const Tensor<T>& luminance, const Embedding& emb,
                        const ModelParameters<T>& p) {
  return decoder_forward(g, fusion_forward(g, encoder_forward(g, luminance, p), emb, p), p);
}

template class ModelParameters<float>;
template class ModelParameters<double>;
template ModelParameters<double> ModelParameters<float>::cast<double>() const;
template ModelParameters<float> ModelParameters<double>::cast<float>() const;
template ModelParameters<float> ModelParameters<float>::cast<float>() const;

#define COLORFUSE_INSTANTIATE_MODEL(T)                                                         \
  template ModelParameters<T> init_parameters<T>(std::uint64_t);                               \
  template Tensor<T> encoder_forward(Graph<T>&, const Tensor<T>&, const ModelParameters<T>&);  \
  template Tensor<T> fuse_features(Graph<T>&, const Tensor<T>&, const Embedding&);             \
  template Tensor<T> fusion_forward(Graph<T>&, const Tensor<T>&, const Embedding&,             \
                                    const ModelParameters<T>&);                                \
  template Tensor<T> decoder_forward(Graph<T>&, const Tensor<T>&, const ModelParameters<T>&);  \
  template Tensor<T> model_forward(Graph<T>&, const Tensor<T>&, const Embedding&,              \
                                   const ModelParameters<T>&);

COLORFUSE_INSTANTIATE_MODEL(float)
COLORFUSE_INSTANTIATE_MODEL(double)

#undef COLORFUSE_INSTANTIATE_MODEL

}  // namespace colorfuse
