#include "colorfuse/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "colorfuse/adam.hpp"
#include "colorfuse/ops.hpp"
#include "colorfuse/png_io.hpp"
#include "colorfuse/random.hpp"

namespace colorfuse {

namespace {

// Independent streams for splitting and shuffling; initialization uses the
// seed directly.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kSplitStream = 1, kShuffleStream = 2 };

std::filesystem::path resolve(const std::filesystem::path& root, const std::string& field) {
  std::filesystem::path p(field);
  return p.is_absolute() ? p : root / p;
}

}  // namespace

DatasetManifest::DatasetManifest(std::filesystem::path root, std::vector<ManifestEntry> entries)
    : root_(std::move(root)), entries_(std::move(entries)) {
  std::set<std::filesystem::path> seen;
  for (const auto& e : entries_) {
    const auto key = e.image.lexically_normal();
    if (!seen.insert(key).second) throw InputError("duplicate image in manifest: " + e.image.string());
    if (!std::filesystem::exists(e.image)) throw InputError("image not found: " + e.image.string());
    if (e.embedding && !std::filesystem::exists(*e.embedding)) {
      throw InputError("embedding not found: " + e.embedding->string());
    }
  }
}

DatasetManifest DatasetManifest::parse(std::string_view text, const std::filesystem::path& root) {
  std::vector<ManifestEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    const std::string image = line.substr(0, tab);
    if (image.empty()) throw FormatError("manifest line " + std::to_string(line_no) + ": empty image path");
    ManifestEntry e{resolve(root, image), std::nullopt};
    if (tab != std::string::npos) {
      const std::string emb = line.substr(tab + 1);
      if (emb.find('\t') != std::string::npos) {
        throw FormatError("manifest line " + std::to_string(line_no) + ": too many fields");
      }
      if (!emb.empty()) e.embedding = resolve(root, emb);
    }
    entries.push_back(std::move(e));
  }
  return DatasetManifest(root, std::move(entries));
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path.parent_path());
}

std::map<std::string, std::filesystem::path> DatasetManifest::embedding_files() const {
  std::map<std::string, std::filesystem::path> files;
  for (const auto& e : entries_) {
    if (e.embedding) files.emplace(e.id(), *e.embedding);
  }
  return files;
}

DatasetSplit split_dataset(std::span<const ManifestEntry> entries, double fraction,
                           std::uint64_t seed) {
  if (entries.size() < 2) throw InputError("splitting needs at least 2 entries");
  if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("validation fraction must be in (0, 1)");
  Rng rng(derive_seed(seed, kSplitStream));
  const auto order = shuffled_indices(rng, entries.size());
  const auto n = entries.size();
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);
  DatasetSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_val ? split.validation : split.train).push_back(entries[order[i]]);
  }
  return split;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("learning rate must be positive");
  }
  if (batch_size == 0) throw InputError("batch size must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw InputError("validation fraction must be in (0, 1)");
  }
  if (train_side == 0 || train_side % kDownsampleFactor != 0) {
    throw InputError("training side must be a positive multiple of 8");
  }
}

Example prepare_example(std::string id, const RgbImage& image, std::size_t side,
                        const EmbeddingProvider& provider) {
  if (image.empty()) throw InputError(id + ": empty image");
  const Plane luminance = normalize(srgb_to_lab(image)).l;
  Embedding emb = provider.embed(id, luminance);
  const NormalizedPlanes planes = normalize(srgb_to_lab(resize_with_padding(image, side)));
  return Example{std::move(id), plane_tensor(planes.l), chroma_tensor(planes.a, planes.b),
                 std::move(emb)};
}

Example prepare_example(const std::filesystem::path& image, std::size_t side,
                        const EmbeddingProvider& provider) {
  return prepare_example(image.string(), read_png_rgb(image), side, provider);
}

namespace {

std::vector<Example> prepare_all(std::span<const ManifestEntry> entries, std::size_t side,
                                 const EmbeddingProvider& provider, const TrainHooks& hooks,
                                 std::size_t& skipped) {
  std::vector<Example> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    try {
      out.push_back(prepare_example(e.image, side, provider));
    } catch (const InputError& err) {
      ++skipped;
      const std::string msg = "skipping " + e.image.string() + ": " + err.what();
      if (hooks.on_warning) {
        hooks.on_warning(msg);
      } else {
        std::cerr << "warning: " << msg << '\n';
      }
    }
  }
  return out;
}

double example_loss(const Example& ex, const ModelParameters<float>& params) {
  Graph<float> g(GradMode::disabled);
  const auto pred = model_forward(g, ex.luminance, ex.embedding, params);
  return ops::mse_loss(g, pred, ex.target_ab).item();
}

}  // namespace

double evaluate(std::span<const Example> examples, const ModelParameters<float>& params) {
  if (examples.empty()) throw InputError("evaluation set is empty");
  double total = 0.0;
  for (const auto& ex : examples) total += example_loss(ex, params);
  return total / static_cast<double>(examples.size());
}

double evaluate(std::span<const ManifestEntry> entries, const ModelParameters<float>& params,
                const EmbeddingProvider& provider, std::size_t side) {
  if (entries.empty()) throw InputError("evaluation set is empty");
  std::size_t skipped = 0;
  const auto examples = prepare_all(entries, side, provider, {}, skipped);
  if (examples.empty()) throw InputError("no readable images to evaluate");
  return evaluate(examples, params);
}

TrainReport train_examples(std::span<const Example> train_set,
                           std::span<const Example> validation_set, const TrainConfig& cfg,
                           const ModelParameters<float>& initial, const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.empty()) throw InputError("training set is empty");

  TrainReport report;
  report.parameters = initial.cast<float>();
  for (const auto& ex : train_set) report.train_images.push_back(ex.id);
  for (const auto& ex : validation_set) report.validation_images.push_back(ex.id);

  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  AdamState<float> adam(AdamHyperparameters{cfg.learning_rate});
  Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));
  auto params = report.parameters.tensors();
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = shuffled_indices(shuffle_rng, train_set.size());
    double epoch_loss = 0.0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      const auto inv_batch = 1.0f / static_cast<float>(b1 - b0);
      std::vector<std::string> ids;
      report.parameters.zero_grad();
      for (std::size_t i = b0; i < b1; ++i) {
        const Example& ex = train_set[order[i]];
        ids.push_back(ex.id);
        Graph<float> g;
        const auto pred = model_forward(g, ex.luminance, ex.embedding, report.parameters);
        const auto loss = ops::mse_loss(g, pred, ex.target_ab);
        epoch_loss += loss.item();
        g.backward(ops::scale(g, loss, inv_batch));
      }
      if (hooks.on_batch) hooks.on_batch(ids);
      adam.step(params);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
    if (!validation_set.empty()) stats.validation_loss = evaluate(validation_set, report.parameters);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(stats.train_loss) ||
        (stats.validation_loss && !std::isfinite(*stats.validation_loss))) {
      throw Error("training diverged at epoch " + std::to_string(epoch));
    }

    if (!cfg.checkpoint_dir.empty()) {
      report.last_checkpoint = cfg.checkpoint_dir / "last.koal";
      save_checkpoint(report.parameters, report.last_checkpoint);
      const double score = stats.validation_loss.value_or(stats.train_loss);
      if (score < best) {
        best = score;
        report.best_checkpoint = cfg.checkpoint_dir / "best.koal";
        save_checkpoint(report.parameters, report.best_checkpoint);
      }
    }
    report.epochs.push_back(stats);
    if (hooks.on_epoch) hooks.on_epoch(stats);
  }
  return report;
}

TrainReport train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const EmbeddingProvider& provider, const TrainHooks& hooks) {
  cfg.validate();
  if (manifest.empty()) throw InputError("manifest has no entries");

  DatasetSplit split;
  if (manifest.size() == 1) {
    split.train = manifest.entries();
  } else {
    split = split_dataset(manifest.entries(), cfg.validation_fraction, cfg.seed);
  }

  std::size_t skipped = 0;
  const auto train_set = prepare_all(split.train, cfg.train_side, provider, hooks, skipped);
  const auto validation_set = prepare_all(split.validation, cfg.train_side, provider, hooks, skipped);
  if (train_set.empty()) throw InputError("no readable training images");

  TrainReport report = train_examples(train_set, validation_set, cfg,
                                      init_parameters<float>(cfg.seed),
                                      hooks);
  report.skipped = skipped;
  return report;
}

}  // namespace colorfuse
