#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "colorfuse/colorspace.hpp"

namespace colorfuse::testing {

/// Deterministic landscape-like picture: sky gradient, sun, rolling ground
/// and a few soft blobs. Hues vary with the seed but stay tied to the
/// structure, so luminance predicts chroma reasonably well.
RgbImage synthetic_scene(std::uint64_t seed, std::size_t width, std::size_t height);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Writes `count` synthetic scenes as PNGs into `dir` plus a manifest.tsv
/// listing them (relative paths). Returns the manifest path.
std::filesystem::path write_scene_corpus(const std::filesystem::path& dir, std::size_t count,
                                         std::size_t width, std::size_t height,
                                         std::uint64_t seed = 1);

/// Writes a manifest listing `images` (as given) and returns its path.
std::filesystem::path write_manifest(const std::filesystem::path& path,
                                     const std::vector<std::string>& lines);

}  // namespace colorfuse::testing
