#include "colorfuse/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

namespace colorfuse {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw InputError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

void write_rows(const std::filesystem::path& path, std::size_t width, std::size_t height,
                int color_type, int channels, const std::uint8_t* data) {
  if (width == 0 || height == 0) throw InputError("cannot write an empty image to " + path.string());
  FilePtr f = open_file(path, "wb");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                            png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  std::vector<png_bytep> rows(height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("writing " + path.string() + ": " + message);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  for (std::size_t y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(data + y * width * static_cast<std::size_t>(channels));
  }
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw Error("writing " + path.string() + " failed");
}

}  // namespace

DecodedPng read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_byte header[8] = {};
  if (std::fread(header, 1, sizeof header, f.get()) != sizeof header ||
      png_sig_cmp(header, 0, sizeof header) != 0) {
    throw InputError(path.string() + " is not a PNG file");
  }

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                           png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialisation failed");
  }

  DecodedPng out;
  std::vector<std::uint8_t> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("reading " + path.string() + ": " + message);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, sizeof header);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const auto channels = static_cast<std::size_t>(png_get_channels(png, info));
  const bool gray = channels == 1;
  buffer.resize(static_cast<std::size_t>(width) * height * channels);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = buffer.data() + y * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (gray) {
    std::vector<std::uint8_t> rgb(buffer.size() * 3);
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = buffer[i];
    }
    out.rgb = RgbImage(width, height, std::move(rgb));
    out.grayscale = true;
    out.gray = std::move(buffer);
  } else if (channels == 3) {
    out.rgb = RgbImage(width, height, std::move(buffer));
  } else {
    throw InputError(path.string() + ": unsupported channel count " + std::to_string(channels));
  }
  return out;
}

RgbImage read_png_rgb(const std::filesystem::path& path) { return read_png(path).rgb; }

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_rows(path, img.width(), img.height(), PNG_COLOR_TYPE_RGB, 3, img.bytes().data());
}

void write_png_gray(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    const std::vector<std::uint8_t>& gray) {
  if (gray.size() != width * height) throw InputError("gray buffer does not match dimensions");
  write_rows(path, width, height, PNG_COLOR_TYPE_GRAY, 1, gray.data());
}

}  // namespace colorfuse
