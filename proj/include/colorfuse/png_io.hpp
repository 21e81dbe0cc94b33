#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "colorfuse/colorspace.hpp"

namespace colorfuse {

/// Decoded 8-bit PNG. Gray files keep their single channel in `gray` and are
/// also expanded to r=g=b in `rgb`.
struct DecodedPng {
  RgbImage rgb;
  bool grayscale = false;
  std::vector<std::uint8_t> gray;
};

/// Reads any PNG, reducing it to 8-bit gray or RGB (alpha dropped, palette
/// expanded, 16-bit stripped). Throws InputError on unreadable files.
DecodedPng read_png(const std::filesystem::path& path);

RgbImage read_png_rgb(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& img);
void write_png_gray(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    const std::vector<std::uint8_t>& gray);

}  // namespace colorfuse
