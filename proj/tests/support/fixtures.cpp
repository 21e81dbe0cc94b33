#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>

#include "colorfuse/png_io.hpp"

namespace colorfuse::testing {

namespace {

struct Color {
  double r, g, b;
};

Color mix(Color a, Color b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

std::uint8_t byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); }

}  // namespace

RgbImage synthetic_scene(std::uint64_t seed, std::size_t width, std::size_t height) {
  std::mt19937_64 rng(seed * 7919 + 17);
  auto u = [&rng](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };

  const Color sky_top{u(20, 70), u(60, 120), u(150, 230)};
  const Color sky_horizon{u(150, 210), u(180, 220), u(210, 250)};
  const Color ground_near{u(30, 80), u(70, 120), u(10, 40)};
  const Color ground_far{u(90, 140), u(130, 170), u(40, 80)};
  const Color sun{u(240, 255), u(170, 220), u(40, 90)};
  const Color blob_color{u(120, 200), u(40, 90), u(40, 120)};

  const double horizon = u(0.4, 0.6);
  const double wave_amp = u(0.02, 0.08);
  const double wave_freq = u(1.0, 3.0);
  const double wave_phase = u(0.0, 6.28);
  const double sun_x = u(0.15, 0.85), sun_y = u(0.1, horizon - 0.1), sun_r = u(0.05, 0.1);
  const double blob_x = u(0.2, 0.8), blob_y = u(horizon + 0.1, 0.9), blob_r = u(0.06, 0.14);

  RgbImage img(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
      const double line = horizon + wave_amp * std::sin(wave_freq * 6.28318 * fx + wave_phase);
      Color c;
      if (fy < line) {
        c = mix(sky_top, sky_horizon, fy / line);
        const double d = std::hypot(fx - sun_x, fy - sun_y);
        c = mix(c, sun, 1.0 - smoothstep(sun_r * 0.7, sun_r, d));
      } else {
        c = mix(ground_far, ground_near, (fy - line) / std::max(1e-6, 1.0 - line));
        const double d = std::hypot(fx - blob_x, fy - blob_y);
        c = mix(c, blob_color, 1.0 - smoothstep(blob_r * 0.6, blob_r, d));
      }
      img.set(x, y, {byte(c.r), byte(c.g), byte(c.b)});
    }
  }
  return img;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("colorfuse_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path write_manifest(const std::filesystem::path& path,
                                     const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
  return path;
}

std::filesystem::path write_scene_corpus(const std::filesystem::path& dir, std::size_t count,
                                         std::size_t width, std::size_t height,
                                         std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = "scene_" + std::to_string(i) + ".png";
    write_png(dir / name, synthetic_scene(seed * 1000 + i, width, height));
    lines.push_back(name);
  }
  return write_manifest(dir / "manifest.tsv", lines);
}

}  // namespace colorfuse::testing
