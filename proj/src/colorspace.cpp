#include "colorfuse/colorspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace colorfuse {

RgbImage::RgbImage(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), pixels_(width * height * 3) {
  for (std::size_t i = 0; i < width * height; ++i) {
    pixels_[3 * i] = fill.r;
    pixels_[3 * i + 1] = fill.g;
    pixels_[3 * i + 2] = fill.b;
  }
}

RgbImage::RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width * height * 3) {
    throw InputError("rgb image " + std::to_string(width) + "x" + std::to_string(height) +
                     " with " + std::to_string(pixels_.size()) + " bytes");
  }
}

Rgb RgbImage::at(std::size_t x, std::size_t y) const {
  const std::size_t i = 3 * (y * width_ + x);
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RgbImage::set(std::size_t x, std::size_t y, Rgb c) {
  const std::size_t i = 3 * (y * width_ + x);
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

Plane::Plane(std::size_t width, std::size_t height, float fill)
    : width_(width), height_(height), values_(width * height, fill) {}

Plane::Plane(std::size_t width, std::size_t height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (values_.size() != width * height) {
    throw InputError("plane " + std::to_string(width) + "x" + std::to_string(height) + " with " +
                     std::to_string(values_.size()) + " values");
  }
}

namespace {

// D65 reference white (2 degree observer).
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

constexpr std::array<std::array<double, 3>, 3> kXyzToRgb{{
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
}};

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double srgb_decode(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double srgb_encode(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double f) {
  const double cube = f * f * f;
  return cube > kEpsilon ? cube : (116.0 * f - 16.0) / kKappa;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Lab srgb_to_lab(Rgb c) {
  const std::array<double, 3> lin{srgb_decode(c.r / 255.0), srgb_decode(c.g / 255.0),
                                  srgb_decode(c.b / 255.0)};
  std::array<double, 3> xyz{};
  for (std::size_t i = 0; i < 3; ++i) {
    xyz[i] = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] + kRgbToXyz[i][2] * lin[2];
  }
  const double fx = lab_f(xyz[0] / kWhiteX);
  const double fy = lab_f(xyz[1] / kWhiteY);
  const double fz = lab_f(xyz[2] / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Rgb lab_to_srgb(const Lab& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double y = lab.L > kKappa * kEpsilon ? fy * fy * fy : lab.L / kKappa;
  const std::array<double, 3> xyz{lab_f_inv(fx) * kWhiteX, y * kWhiteY, lab_f_inv(fz) * kWhiteZ};
  std::array<std::uint8_t, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double lin =
        kXyzToRgb[i][0] * xyz[0] + kXyzToRgb[i][1] * xyz[1] + kXyzToRgb[i][2] * xyz[2];
    out[i] = to_byte(srgb_encode(std::clamp(lin, 0.0, 1.0)));
  }
  return {out[0], out[1], out[2]};
}

LabImage srgb_to_lab(const RgbImage& img) {
  const std::size_t w = img.width(), h = img.height();
  LabImage lab{Plane(w, h), Plane(w, h), Plane(w, h)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Lab v = srgb_to_lab(img.at(x, y));
      lab.L.at(x, y) = static_cast<float>(v.L);
      lab.a.at(x, y) = static_cast<float>(v.a);
      lab.b.at(x, y) = static_cast<float>(v.b);
    }
  }
  return lab;
}

RgbImage lab_to_srgb(const LabImage& img) {
  const std::size_t w = img.width(), h = img.height();
  if (img.a.width() != w || img.a.height() != h || img.b.width() != w || img.b.height() != h) {
    throw InputError("lab planes differ in size");
  }
  RgbImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out.set(x, y, lab_to_srgb(Lab{img.L.at(x, y), img.a.at(x, y), img.b.at(x, y)}));
    }
  }
  return out;
}

float normalize_luminance(double L) { return static_cast<float>(L / kLuminanceHalfRange - 1.0); }

double denormalize_luminance(float l) { return (static_cast<double>(l) + 1.0) * kLuminanceHalfRange; }

namespace {

template <typename F>
Plane map_plane(const Plane& p, F f) {
  Plane out(p.width(), p.height());
  for (std::size_t i = 0; i < p.values().size(); ++i) out.values()[i] = f(p.values()[i]);
  return out;
}

}  // namespace

NormalizedPlanes normalize(const LabImage& img) {
  return {map_plane(img.L, [](float v) { return normalize_luminance(v); }),
          map_plane(img.a, [](float v) { return static_cast<float>(v / kChromaRange); }),
          map_plane(img.b, [](float v) { return static_cast<float>(v / kChromaRange); })};
}

LabImage denormalize(const NormalizedPlanes& planes) {
  return {map_plane(planes.l, [](float v) { return static_cast<float>(denormalize_luminance(v)); }),
          map_plane(planes.a, [](float v) { return static_cast<float>(v * kChromaRange); }),
          map_plane(planes.b, [](float v) { return static_cast<float>(v * kChromaRange); })};
}

RgbImage resize_bilinear(const RgbImage& img, std::size_t width, std::size_t height) {
  if (img.empty()) throw InputError("cannot resize an empty image");
  if (width == 0 || height == 0) throw InputError("resize target must be non-empty");
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double max_x = static_cast<double>(img.width() - 1);
  const double max_y = static_cast<double>(img.height() - 1);

  RgbImage out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      const Rgb p00 = img.at(x0, y0), p10 = img.at(x1, y0);
      const Rgb p01 = img.at(x0, y1), p11 = img.at(x1, y1);
      auto lerp = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        const double top = a + (b - a) * wx;
        const double bottom = c + (d - c) * wx;
        return static_cast<std::uint8_t>(std::lround(std::clamp(top + (bottom - top) * wy, 0.0, 255.0)));
      };
      out.set(x, y, {lerp(p00.r, p10.r, p01.r, p11.r), lerp(p00.g, p10.g, p01.g, p11.g),
                     lerp(p00.b, p10.b, p01.b, p11.b)});
    }
  }
  return out;
}

PaddedPlacement padded_placement(std::size_t width, std::size_t height, std::size_t side) {
  if (width == 0 || height == 0) throw InputError("cannot place an empty image");
  if (side == 0) throw InputError("target side must be positive");
  const std::size_t longest = std::max(width, height);
  auto scaled = [&](std::size_t d) {
    const auto v = std::lround(static_cast<double>(d) * static_cast<double>(side) /
                               static_cast<double>(longest));
    return std::clamp<std::size_t>(static_cast<std::size_t>(v), 1, side);
  };
  const std::size_t cw = width == longest ? side : scaled(width);
  const std::size_t ch = height == longest ? side : scaled(height);
  return {cw, ch, (side - cw) / 2, (side - ch) / 2};
}

RgbImage resize_with_padding(const RgbImage& img, std::size_t side) {
  if (img.empty()) throw InputError("cannot resize an empty image");
  const PaddedPlacement place = padded_placement(img.width(), img.height(), side);
  const RgbImage content = resize_bilinear(img, place.content_width, place.content_height);
  RgbImage canvas(side, side, kWhite);
  for (std::size_t y = 0; y < place.content_height; ++y) {
    for (std::size_t x = 0; x < place.content_width; ++x) {
      canvas.set(x + place.offset_x, y + place.offset_y, content.at(x, y));
    }
  }
  return canvas;
}

Tensor<float> plane_tensor(const Plane& p) {
  return Tensor<float>::from_data(Shape{1, p.height(), p.width()}, p.values());
}

Tensor<float> chroma_tensor(const Plane& a, const Plane& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InputError("chroma planes differ in size");
  }
  std::vector<float> data;
  data.reserve(2 * a.values().size());
  data.insert(data.end(), a.values().begin(), a.values().end());
  data.insert(data.end(), b.values().begin(), b.values().end());
  return Tensor<float>::from_data(Shape{2, a.height(), a.width()}, std::move(data));
}

Tensor<float> stack_luminance3(const Plane& l) {
  std::vector<float> data;
  data.reserve(3 * l.values().size());
  for (int c = 0; c < 3; ++c) data.insert(data.end(), l.values().begin(), l.values().end());
  return Tensor<float>::from_data(Shape{3, l.height(), l.width()}, std::move(data));
}

}  // namespace colorfuse
