#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colorfuse/embedding.hpp"
#include "colorfuse/model.hpp"

namespace colorfuse {

struct ManifestEntry {
  std::filesystem::path image;
  std::optional<std::filesystem::path> embedding;

  std::string id() const { return image.string(); }
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Image list for training/evaluation. Text form: one entry per line,
/// `image_path[TAB embedding_path]`, paths relative to the manifest's
/// directory. Blank lines and lines starting with '#' are ignored.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  /// Rejects duplicate image paths and entries whose files do not exist.
  DatasetManifest(std::filesystem::path root, std::vector<ManifestEntry> entries);

  static DatasetManifest load(const std::filesystem::path& path);
  static DatasetManifest parse(std::string_view text, const std::filesystem::path& root);

  const std::filesystem::path& root() const noexcept { return root_; }
  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// image id -> embedding file, for entries that list one.
  std::map<std::string, std::filesystem::path> embedding_files() const;

 private:
  std::filesystem::path root_;
  std::vector<ManifestEntry> entries_;
};

struct DatasetSplit {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> validation;
};

/// Seeded shuffle, then the first round(fraction * n) entries (at least one,
/// at most n - 1) become the validation set.
DatasetSplit split_dataset(std::span<const ManifestEntry> entries, double fraction,
                           std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 8;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  double validation_fraction = 0.10;
  std::size_t train_side = 224;
  /// Where last.koal / best.koal are written each epoch; empty disables.
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

/// One prepared training pair plus its embedding.
struct Example {
  std::string id;
  Tensor<float> luminance;  // [1,side,side], normalized
  Tensor<float> target_ab;  // [2,side,side], normalized
  Embedding embedding;
};

/// Padded resize to side x side, Lab conversion and normalization. The
/// embedding is computed from the image's full-resolution luminance.
Example prepare_example(const std::filesystem::path& image, std::size_t side,
                        const EmbeddingProvider& provider);
Example prepare_example(std::string id, const RgbImage& image, std::size_t side,
                        const EmbeddingProvider& provider);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> validation_loss;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  ModelParameters<float> parameters;
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
  std::vector<std::string> train_images;
  std::vector<std::string> validation_images;
  std::size_t skipped = 0;
};

struct TrainHooks {
  std::function<void(const EpochStats&)> on_epoch;
  /// Ids of the examples whose gradients form one optimizer step.
  std::function<void(std::span<const std::string>)> on_batch;
  std::function<void(std::string_view)> on_warning;
};

/// Adam on the mean per-image chroma loss, fully determined by cfg.seed.
/// Datasets of a single image train on it without a validation set.
TrainReport train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const EmbeddingProvider& provider, const TrainHooks& hooks = {});

/// Same loop on already prepared examples, starting from a copy of `initial`.
TrainReport train_examples(std::span<const Example> train_set, std::span<const Example> validation_set,
                           const TrainConfig& cfg, const ModelParameters<float>& initial,
                           const TrainHooks& hooks = {});

/// Mean per-image chroma loss of a forward pass; parameters are not touched.
double evaluate(std::span<const Example> examples, const ModelParameters<float>& params);
double evaluate(std::span<const ManifestEntry> entries, const ModelParameters<float>& params,
                const EmbeddingProvider& provider, std::size_t side);

}  // namespace colorfuse
