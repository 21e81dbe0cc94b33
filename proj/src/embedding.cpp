#include "colorfuse/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "binary_io.hpp"
#include "colorfuse/png_io.hpp"
#include "colorfuse/random.hpp"

namespace colorfuse {

namespace {
constexpr std::string_view kMagic = "KEMB";
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kStubGrid = 8;
}  // namespace

Embedding::Embedding(std::vector<float> values) : values_(std::move(values)) {
  if (values_.size() != kEmbeddingSize) {
    throw InputError("embedding has " + std::to_string(values_.size()) + " values, expected " +
                     std::to_string(kEmbeddingSize));
  }
  if (!std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); })) {
    throw InputError("embedding contains non-finite values");
  }
}

Embedding Embedding::zeros() { return Embedding(std::vector<float>(kEmbeddingSize, 0.0f)); }

Embedding stub_embedding(const Plane& luminance) {
  const std::size_t w = luminance.width(), h = luminance.height();
  if (w == 0 || h == 0) throw InputError("stub embedding of an empty plane");

  auto cell_range = [](std::size_t i, std::size_t n) {
    std::size_t lo = i * n / kStubGrid;
    std::size_t hi = (i + 1) * n / kStubGrid;
    if (hi <= lo) {
      lo = std::min(lo, n - 1);
      hi = lo + 1;
    }
    return std::pair{lo, hi};
  };

  // FNV-1a over the quantized statistics.
  std::uint64_t hash = 14695981039346656037ull;
  auto mix = [&hash](std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffu;
      hash *= 1099511628211ull;
    }
  };
  for (std::size_t gy = 0; gy < kStubGrid; ++gy) {
    const auto [y0, y1] = cell_range(gy, h);
    for (std::size_t gx = 0; gx < kStubGrid; ++gx) {
      const auto [x0, x1] = cell_range(gx, w);
      double sum = 0.0, sq = 0.0;
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          const double v = luminance.at(x, y);
          sum += v;
          sq += v * v;
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      const double mean = sum / n;
      const double var = std::max(0.0, sq / n - mean * mean);
      mix(std::llround(mean * 1e6));
      mix(std::llround(var * 1e6));
    }
  }

  Rng rng(hash);
  std::vector<float> values(kEmbeddingSize);
  std::vector<double> draw(kEmbeddingSize);
  double norm = 0.0;
  for (auto& v : draw) {
    v = uniform(rng, -1.0, 1.0);
    norm += v * v;
  }
  // Unit L2 norm: the tiled copy then carries about as much energy per
  // position as the 256 encoder channels instead of swamping them.
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < kEmbeddingSize; ++i) values[i] = static_cast<float>(draw[i] / norm);
  return Embedding(std::move(values));
}

Embedding StubEmbeddingProvider::embed(std::string_view, const Plane& luminance) const {
  return stub_embedding(luminance);
}

FileEmbeddingProvider::FileEmbeddingProvider(
    const std::map<std::string, std::filesystem::path>& files) {
  for (const auto& [id, path] : files) cache_.emplace(id, load_embedding(path));
}

Embedding FileEmbeddingProvider::embed(std::string_view image_id, const Plane& luminance) const {
  if (auto it = cache_.find(image_id); it != cache_.end()) return it->second;
  return stub_embedding(luminance);
}

void save_embedding(const Embedding& emb, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(emb.size()));
  for (float v : emb.values()) w.f32(v);
  w.write_to(path);
}

Embedding load_embedding(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  if (r.raw(kMagic.size(), "magic") != kMagic) {
    throw FormatError(path.string() + ": bad magic, not a KEMB embedding");
  }
  if (const auto version = r.u32("version"); version != kVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t dim = r.u32("dimension");
  if (dim != kEmbeddingSize) {
    throw FormatError(path.string() + ": wrong dimension " + std::to_string(dim) + ", expected " +
                      std::to_string(kEmbeddingSize));
  }
  std::vector<float> values(dim);
  for (auto& v : values) v = r.f32("embedding values");
  if (r.remaining() != 0) throw FormatError(path.string() + ": trailing bytes after payload");
  try {
    return Embedding(std::move(values));
  } catch (const InputError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

RgbImage extractor_input(const RgbImage& img) {
  const LabImage lab = srgb_to_lab(resize_with_padding(img, kExtractorSide));
  const Tensor<float> stacked = stack_luminance3(normalize(lab).l);
  const std::size_t n = kExtractorSide * kExtractorSide;
  auto data = stacked.data();
  std::vector<std::uint8_t> bytes(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double l = data[c * n + i];
      bytes[3 * i + c] =
          static_cast<std::uint8_t>(std::lround(std::clamp((l + 1.0) * 0.5, 0.0, 1.0) * 255.0));
    }
  }
  return RgbImage(kExtractorSide, kExtractorSide, std::move(bytes));
}

void export_extractor_input(const RgbImage& img, const std::filesystem::path& path) {
  write_png(path, extractor_input(img));
}

}  // namespace colorfuse
