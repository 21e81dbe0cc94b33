#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colorfuse/colorspace.hpp"

namespace colorfuse {

/// Length of the global feature vector produced by the external classifier
/// (its last layer before the softmax).
inline constexpr std::size_t kEmbeddingSize = 1001;

/// Side of the square gray image the external classifier consumes.
inline constexpr std::size_t kExtractorSide = 299;

/// Global image descriptor fused into every spatial position of the encoder
/// output. Always kEmbeddingSize finite values.
class Embedding {
 public:
  explicit Embedding(std::vector<float> values);
  static Embedding zeros();

  std::span<const float> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<float> values_;
};

/// Source of embeddings for images. Implementations are deterministic and
/// safe to query concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// `image_id` identifies the image (its path); `luminance` is its
  /// normalized L plane at original resolution.
  virtual Embedding embed(std::string_view image_id, const Plane& luminance) const = 0;
};

/// Pseudo-embedding seeded by a hash of 8x8-grid luminance means and
/// variances. Unit L2 norm, so values lie well inside [-1, 1].
Embedding stub_embedding(const Plane& luminance);

class StubEmbeddingProvider final : public EmbeddingProvider {
 public:
  Embedding embed(std::string_view image_id, const Plane& luminance) const override;
};

/// Serves precomputed embeddings for the listed image ids (loaded eagerly)
/// and falls back to the stub for everything else.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::map<std::string, std::filesystem::path>& files);

  Embedding embed(std::string_view image_id, const Plane& luminance) const override;
  std::size_t file_backed_count() const noexcept { return cache_.size(); }

 private:
  std::map<std::string, Embedding, std::less<>> cache_;
};

/// KEMB: "KEMB", u32 version 1, u32 dim (1001), dim little-endian float32.
void save_embedding(const Embedding& emb, const std::filesystem::path& path);
Embedding load_embedding(const std::filesystem::path& path);

/// The 299x299 three-channel gray image the external extractor expects:
/// padded resize, then the L* plane (scaled to 0..255) in all three channels.
RgbImage extractor_input(const RgbImage& img);
void export_extractor_input(const RgbImage& img, const std::filesystem::path& path);

}  // namespace colorfuse
