#pragma once

#include <cstddef>

#include "colorfuse/colorspace.hpp"
#include "colorfuse/embedding.hpp"
#include "colorfuse/model.hpp"
#include "colorfuse/png_io.hpp"

namespace colorfuse {

/// L* plane of an input image. Gray files are read directly as L* (0..255
/// mapped to 0..100); color files go through the Lab conversion.
Plane input_luminance(const DecodedPng& input);

/// Mirror-pads (without repeating the edge) on the bottom/right up to
/// width x height.
Plane reflect_pad(const Plane& p, std::size_t width, std::size_t height);

/// Smallest multiple of 8 that is >= n.
std::size_t round_up_to_multiple_of_8(std::size_t n);

/// Predicts chroma for an L* plane of any size and merges it with that same
/// luminance. Result planes have the input's dimensions.
LabImage colorize_luminance(const ModelParameters<float>& params, const Plane& luminance,
                            const Embedding& emb);

/// Full image path: luminance, stub or supplied embedding, prediction,
/// conversion back to sRGB.
RgbImage colorize(const ModelParameters<float>& params, const DecodedPng& input,
                  const Embedding* embedding = nullptr);

}  // namespace colorfuse
