#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "colorfuse/tensor.hpp"

namespace colorfuse {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};

/// 8-bit sRGB image, row-major RGB triples.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, Rgb fill = {});
  RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  Rgb at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, Rgb c);
  const std::vector<std::uint8_t>& bytes() const noexcept { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Single real-valued image plane.
class Plane {
 public:
  Plane() = default;
  Plane(std::size_t width, std::size_t height, float fill = 0.0f);
  Plane(std::size_t width, std::size_t height, std::vector<float> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  float at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
  float& at(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }
  const std::vector<float>& values() const noexcept { return values_; }
  std::vector<float>& values() noexcept { return values_; }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> values_;
};

/// CIE L*a*b* planes. L in [0,100]; a, b in chroma units.
struct LabImage {
  Plane L, a, b;

  std::size_t width() const noexcept { return L.width(); }
  std::size_t height() const noexcept { return L.height(); }
};

/// L*a*b* planes scaled into [-1, 1].
struct NormalizedPlanes {
  Plane l, a, b;
};

struct Lab {
  double L = 0.0, a = 0.0, b = 0.0;
};

// D65 white, standard sRGB transfer curve.
Lab srgb_to_lab(Rgb c);
Rgb lab_to_srgb(const Lab& lab);

LabImage srgb_to_lab(const RgbImage& img);
/// Out-of-gamut colors are clamped per channel after conversion.
RgbImage lab_to_srgb(const LabImage& img);

/// Luminance divisor/offset and chroma divisor of the [-1,1] mapping.
inline constexpr double kLuminanceHalfRange = 50.0;
inline constexpr double kChromaRange = 128.0;

NormalizedPlanes normalize(const LabImage& img);
LabImage denormalize(const NormalizedPlanes& planes);

float normalize_luminance(double L);
double denormalize_luminance(float l);

/// Bilinear resampling with pixel-center alignment.
RgbImage resize_bilinear(const RgbImage& img, std::size_t width, std::size_t height);

/// Scales the longest side to `side`, keeps the aspect ratio, centers the
/// result on a white side x side canvas.
RgbImage resize_with_padding(const RgbImage& img, std::size_t side);

/// Placement of the scaled content inside a resize_with_padding canvas.
struct PaddedPlacement {
  std::size_t content_width, content_height, offset_x, offset_y;
};
PaddedPlacement padded_placement(std::size_t width, std::size_t height, std::size_t side);

/// [1,H,W] tensor of a plane.
Tensor<float> plane_tensor(const Plane& p);
/// [2,H,W] tensor of two chroma planes.
Tensor<float> chroma_tensor(const Plane& a, const Plane& b);
/// [3,H,W]: the plane repeated in all three channels.
Tensor<float> stack_luminance3(const Plane& l);

}  // namespace colorfuse
