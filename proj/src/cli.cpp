#include "colorfuse/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "colorfuse/colorize.hpp"
#include "colorfuse/embedding.hpp"
#include "colorfuse/model.hpp"
#include "colorfuse/png_io.hpp"
#include "colorfuse/training.hpp"

namespace colorfuse {

namespace fs = std::filesystem;

namespace {

/// Bad invocation detected after flag parsing (exit code 2).
struct UsageError : Error {
  using Error::Error;
};

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

DatasetManifest open_manifest(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw UsageError("manifest not found: " + path.string());
  return DatasetManifest::load(path);
}

struct TrainArgs {
  fs::path manifest;
  TrainConfig cfg;
  fs::path out_dir = "checkpoints";
};

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  TrainConfig cfg = args.cfg;
  cfg.checkpoint_dir = args.out_dir;
  try {
    cfg.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  const DatasetManifest manifest = open_manifest(args.manifest);
  const FileEmbeddingProvider provider(manifest.embedding_files());

  TrainHooks hooks;
  hooks.on_epoch = [&out](const EpochStats& s) {
    out << "epoch " << s.epoch << " train=" << fixed6(s.train_loss)
        << " val=" << (s.validation_loss ? fixed6(*s.validation_loss) : std::string("none")) << '\n'
        << std::flush;
  };
  hooks.on_warning = [&err](std::string_view msg) { err << "warning: " << msg << '\n'; };

  const TrainReport report = train(manifest, cfg, provider, hooks);
  if (!report.last_checkpoint.empty()) out << "checkpoint=" << report.last_checkpoint.string() << '\n';
  if (!report.best_checkpoint.empty()) out << "best=" << report.best_checkpoint.string() << '\n';
  out << "train_images=" << report.train_images.size()
      << " validation_images=" << report.validation_images.size()
      << " skipped=" << report.skipped << '\n';
  return kExitSuccess;
}

struct ColorizeArgs {
  fs::path checkpoint;
  std::vector<fs::path> inputs;
  fs::path embedding;
  fs::path output;
};

int cmd_colorize(const ColorizeArgs& args, std::ostream& out, std::ostream&) {
  const ModelParameters<float> params = load_checkpoint(args.checkpoint);
  std::unique_ptr<Embedding> emb;
  if (!args.embedding.empty()) emb = std::make_unique<Embedding>(load_embedding(args.embedding));

  const bool to_directory = args.inputs.size() > 1 || fs::is_directory(args.output);
  if (to_directory) fs::create_directories(args.output);
  for (const auto& input : args.inputs) {
    const fs::path target =
        to_directory ? args.output / (input.stem().string() + ".png") : args.output;
    write_png(target, colorize(params, read_png(input), emb.get()));
    out << "wrote " << target.string() << '\n';
  }
  return kExitSuccess;
}

struct ExportArgs {
  fs::path manifest;
  fs::path out_dir;
};

int cmd_export(const ExportArgs& args, std::ostream& out, std::ostream& err) {
  const DatasetManifest manifest = open_manifest(args.manifest);
  if (manifest.empty()) {
    err << "warning: manifest " << args.manifest.string() << " has no entries\n";
    return kExitSuccess;
  }
  fs::create_directories(args.out_dir);
  std::set<std::string> used;
  std::size_t written = 0;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& entry = manifest.entries()[i];
    std::string name = entry.image.stem().string();
    if (!used.insert(name).second) {
      name += "_" + std::to_string(i);
      used.insert(name);
    }
    const fs::path target = args.out_dir / (name + ".png");
    try {
      export_extractor_input(read_png_rgb(entry.image), target);
      out << "wrote " << target.string() << '\n';
      ++written;
    } catch (const Error& e) {
      err << "warning: " << entry.image.string() << ": " << e.what() << '\n';
    }
  }
  return written == 0 ? kExitFailure : kExitSuccess;
}

struct EvalArgs {
  fs::path checkpoint;
  fs::path manifest;
  std::size_t side = 224;
};

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream&) {
  const DatasetManifest manifest = open_manifest(args.manifest);
  const ModelParameters<float> params = load_checkpoint(args.checkpoint);
  const FileEmbeddingProvider provider(manifest.embedding_files());
  out << "val_loss=" << fixed6(evaluate(manifest.entries(), params, provider, args.side)) << '\n';
  return kExitSuccess;
}

int cmd_inspect(const fs::path& checkpoint, std::ostream& out) {
  const ModelParameters<float> params = load_checkpoint(checkpoint);
  const auto names = ModelParameters<float>::tensor_names();
  const auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    out << names[i] << ' ' << to_string(tensors[i].shape()) << ' ' << tensors[i].size() << '\n';
  }
  out << "total_parameters=" << params.parameter_count() << '\n';
  return kExitSuccess;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Luminance-to-chroma colorization network: training and inference"};
  app.name("colorfuse");
  app.require_subcommand(1, 1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train on a manifest of color images");
  train->add_option("--manifest", train_args.manifest, "Manifest TSV")->required();
  train->add_option("--epochs", train_args.cfg.epochs, "Number of epochs")->capture_default_str();
  train->add_option("--seed", train_args.cfg.seed, "Seed for all randomness")->capture_default_str();
  train->add_option("--lr", train_args.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--batch-size", train_args.cfg.batch_size, "Images per step")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--val-fraction", train_args.cfg.validation_fraction, "Held-out fraction")
      ->capture_default_str();
  train->add_option("--side", train_args.cfg.train_side, "Training image side")
      ->capture_default_str();
  train->add_option("--out-dir", train_args.out_dir, "Checkpoint directory")->capture_default_str();

  ColorizeArgs colorize_args;
  auto* colorize_cmd = app.add_subcommand("colorize", "Colorize gray or color PNG images");
  colorize_cmd->add_option("--checkpoint", colorize_args.checkpoint, "KOAL checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  colorize_cmd->add_option("--input", colorize_args.inputs, "Input PNG(s)")
      ->required()
      ->check(CLI::ExistingFile);
  colorize_cmd->add_option("--embedding", colorize_args.embedding, "KEMB embedding")
      ->check(CLI::ExistingFile);
  colorize_cmd->add_option("--output", colorize_args.output,
                           "Output PNG, or directory when several inputs are given")
      ->required();

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-inception-inputs",
                                        "Write 299x299 stacked-luminance PNGs for the extractor");
  export_cmd->add_option("--manifest", export_args.manifest, "Manifest TSV")->required();
  export_cmd->add_option("--out-dir", export_args.out_dir, "Output directory")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Mean chroma loss of a checkpoint on a manifest");
  eval->add_option("--checkpoint", eval_args.checkpoint, "KOAL checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_args.manifest, "Manifest TSV")->required();
  eval->add_option("--side", eval_args.side, "Evaluation image side")->capture_default_str();

  fs::path inspect_path;
  auto* inspect = app.add_subcommand("inspect-checkpoint", "List the tensors of a checkpoint");
  inspect->add_option("checkpoint", inspect_path, "KOAL checkpoint")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args, out, err);
    if (*colorize_cmd) return cmd_colorize(colorize_args, out, err);
    if (*export_cmd) return cmd_export(export_args, out, err);
    if (*eval) return cmd_eval(eval_args, out, err);
    if (*inspect) return cmd_inspect(inspect_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace colorfuse
