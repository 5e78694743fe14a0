#include "fer/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "fer/augment.hpp"
#include "fer/audio.hpp"
#include "fer/config.hpp"
#include "fer/dataset.hpp"
#include "fer/error.hpp"
#include "fer/fusion_eval.hpp"
#include "fer/streams.hpp"
#include "fer/synthetic.hpp"
#include "fer/wav.hpp"

namespace fs = std::filesystem;

namespace fer {

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  std::string root;
  std::string split;
  std::string manifest;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool dataset) {
  cmd->add_option("--config", o.config_path, "Configuration file (sectioned key=value)");
  cmd->add_option("--seed", o.seed, "Root random seed");
  cmd->add_option("--set", o.overrides, "Override a configuration value, e.g. train.lr0=0.01");
  if (dataset) {
    cmd->add_option("--root", o.root, "Dataset root directory");
    cmd->add_option("--split", o.split, "Dataset split (train or validation)");
    cmd->add_option("--manifest", o.manifest, "Line-delimited manifest file instead of a dataset root");
  }
}

RunConfig resolve_config(const CommonOptions& o, std::optional<int> epochs = std::nullopt) {
  RunConfig config = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  for (const auto& s : o.overrides) apply_override(config, s);
  if (epochs) {
    // A shortened run keeps only the milestones it still reaches.
    config.train.epochs = *epochs;
    std::erase_if(config.train.milestones, [&](int m) { return m >= *epochs; });
  }
  if (o.seed) {
    config.seed = *o.seed;
    config.train.seed = *o.seed;
  }
  if (!o.root.empty()) config.dataset_root = o.root;
  if (!o.manifest.empty()) config.manifest = o.manifest;
  config.validate();
  return config;
}

DatasetManifest resolve_manifest(const RunConfig& config, Split split) {
  if (config.manifest) return load_manifest(*config.manifest, split);
  if (config.dataset_root.empty()) throw ArgumentError("no dataset: pass --root, --manifest or set dataset.root");
  return build_manifest(config.dataset_root, split, config.fps);
}

Split split_or(const CommonOptions& o, Split fallback) {
  return o.split.empty() ? fallback : parse_split(o.split);
}

fs::path ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ArgumentError("--out is required");
  fs::create_directories(dir);
  return dir;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

int cmd_stats(const CommonOptions& o, std::ostream& out) {
  const RunConfig config = resolve_config(o);
  const Split split = split_or(o, config.split);
  const DatasetManifest manifest = resolve_manifest(config, split);
  const ClassDistribution dist = class_distribution(manifest);
  char line[128];
  out << "split=" << split_name(split) << " videos=" << manifest.videos.size() << '\n';
  std::snprintf(line, sizeof line, "%-10s %10s %7s\n", "class", "count", "ratio");
  out << line;
  for (auto c : kAllClasses) {
    std::snprintf(line, sizeof line, "%-10s %10lld %7.3f\n", std::string(class_name(c)).c_str(),
                  static_cast<long long>(dist.counts[index_of(c)]), dist.ratios[index_of(c)]);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-10s %10lld %7.3f\n", "Total", static_cast<long long>(dist.total),
                dist.total > 0 ? 1.0 : 0.0);
  out << line;
  return kExitOk;
}

int cmd_manifest(const CommonOptions& o, const std::string& dest, std::ostream& out) {
  const RunConfig config = resolve_config(o);
  const Split split = split_or(o, config.split);
  const DatasetManifest manifest = resolve_manifest(config, split);
  if (dest.empty()) throw ArgumentError("--out is required");
  save_manifest(dest, manifest);
  out << "wrote " << manifest.frame_count() << " frame records for " << manifest.videos.size() << " videos to "
      << dest << '\n';
  return kExitOk;
}

int cmd_preview(const CommonOptions& o, const std::string& image_a, const std::string& image_b,
                std::ostream& out) {
  const RunConfig config = resolve_config(o);
  const fs::path dir = ensure_dir(o.out);
  const Image a = read_image(image_a);
  Image b = read_image(image_b);
  if (!b.same_shape(a)) b = resize_bilinear(b, a.height(), a.width());
  if (a.height() < 2 || a.width() < 2) throw ArgumentError("preview images must be at least 2x2");

  // Input is shown as Neutral and the reference as Anger so the mixed label is visible in the log.
  const SoftLabel la = one_hot(Expression::Neutral), lb = one_hot(Expression::Anger);
  std::ofstream audit(dir / "audit.log", std::ios::app | std::ios::binary);
  if (!audit) throw IoError("cannot open audit log in " + dir.string());
  int written = 0;
  for (auto orientation : {Orientation::Vertical, Orientation::Horizontal})
    for (auto side : {KeptSide::First, KeptSide::Second})
      for (double alpha : {0.4, 0.6}) {
        const HalfMixSpec spec{orientation, side, alpha};
        const auto sample = half_mix(a, la, b, lb, spec, config.augment.mask, fs::path(image_a).filename().string(),
                                     fs::path(image_b).filename().string());
        char name[96];
        std::snprintf(name, sizeof name, "halfmix_%s_%s_a%02d.png", std::string(orientation_name(orientation)).c_str(),
                      std::string(side_name(side)).c_str(), static_cast<int>(std::lround(alpha * 100)));
        write_image(dir / name, sample.image);
        audit << "input=" << sample.provenance.input_id << " reference=" << sample.provenance.reference_id
              << " orientation=" << orientation_name(orientation) << " side=" << side_name(side)
              << " alpha=" << fmt("%.1f", alpha) << " label_neutral=" << fmt("%.2f", sample.label[0])
              << " label_anger=" << fmt("%.2f", sample.label[1]) << " seed=" << config.seed << " file=" << name
              << '\n';
        ++written;
      }
  out << "wrote " << written << " previews to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_melspec(const CommonOptions& o, const std::string& wav, std::optional<double> start, double duration,
                bool images, std::ostream& out) {
  const RunConfig config = resolve_config(o);
  const fs::path dir = ensure_dir(o.out);
  if (wav.empty()) throw ArgumentError("--wav is required");
  const AudioClip full = resample_linear(read_wav(wav), config.mel.sample_rate);
  std::vector<double> starts;
  if (start) {
    starts.push_back(*start);
  } else {
    const auto windows = std::max<long>(1, static_cast<long>(std::floor(full.duration() / duration + 1e-9)));
    for (long k = 0; k < windows; ++k) starts.push_back(static_cast<double>(k) * duration);
  }
  const std::string stem = fs::path(wav).stem().string();
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const AudioClip clip = extract_window(full, starts[k], duration);
    SpectrogramGrid grid = mel_spectrogram(clip, config.mel);
    grid.video_id = stem;
    grid.window_index = static_cast<int>(k);
    char name[64];
    std::snprintf(name, sizeof name, "_w%03zu", k);
    save_mels(dir / (stem + name + ".mels"), grid);
    if (images) write_image(dir / (stem + name + ".png"), spectrogram_to_image(grid));
    out << stem << name << " start=" << fmt("%.3f", starts[k]) << " n_mels=" << grid.n_mels()
        << " n_frames=" << grid.n_frames() << (clip.padded ? " padded" : "") << '\n';
  }
  return kExitOk;
}

int cmd_train(const CommonOptions& o, const std::string& stream_name_arg, std::optional<int> epochs,
              std::ostream& out) {
  const RunConfig config = resolve_config(o, epochs);
  const Stream stream = parse_stream(stream_name_arg);
  const fs::path dir = ensure_dir(o.out);
  const DatasetManifest manifest = resolve_manifest(config, split_or(o, config.split));

  const std::string header = "stream=" + std::string(stream_name(stream)) + " " + config.describe_training();
  out << header << '\n';
  const TrainHistory history = train_stream(manifest, config.stream_options(stream));

  const std::string base(stream_name(stream));
  save_checkpoint(dir / (base + ".ferh"), history.head);
  std::ofstream log(dir / (base + "_train.log"), std::ios::binary);
  if (!log) throw IoError("cannot write training log in " + dir.string());
  write_training_log(log, history, header);
  out << "steps=" << history.steps << " final_loss=" << fmt("%.6f", history.epochs.back().mean_loss) << '\n';
  return kExitOk;
}

int cmd_predict(const CommonOptions& o, const std::string& stream_name_arg, const std::string& checkpoint,
                std::ostream& out) {
  const RunConfig config = resolve_config(o);
  const Stream stream = parse_stream(stream_name_arg);
  const fs::path dir = ensure_dir(o.out);
  if (checkpoint.empty()) throw ArgumentError("--checkpoint is required");
  const LinearHead head = load_checkpoint(checkpoint);
  if (head.dim != backbone_for(stream).output_dim())
    throw ArgumentError("checkpoint dimension " + std::to_string(head.dim) + " does not match the " +
                        std::string(stream_name(stream)) + " backbone");
  const DatasetManifest manifest = resolve_manifest(config, split_or(o, config.eval_split));
  const StreamScores scores = predict_stream(manifest, stream, head, config.mel);
  const fs::path dest = dir / (std::string(stream_name(stream)) + "_scores.csv");
  save_scores_csv(dest, scores);
  out << "wrote " << scores.rows.size() << " rows to " << dest.string() << '\n';
  return kExitOk;
}

std::map<Stream, StreamScores> load_stream_files(const std::string& visual, const std::string& temporal,
                                                 const std::string& audio) {
  std::map<Stream, StreamScores> scores;
  if (!visual.empty()) scores[Stream::Visual] = load_scores_csv(visual, Stream::Visual);
  if (!temporal.empty()) scores[Stream::Temporal] = load_scores_csv(temporal, Stream::Temporal);
  if (!audio.empty()) scores[Stream::Audio] = load_scores_csv(audio, Stream::Audio);
  if (scores.empty()) throw ArgumentError("at least one of --visual, --temporal, --audio is required");
  return scores;
}

int cmd_fuse(const CommonOptions& o, const std::string& v, const std::string& t, const std::string& a,
             std::ostream& out) {
  const RunConfig config = resolve_config(o);
  const fs::path dir = ensure_dir(o.out);
  const auto scores = load_stream_files(v, t, a);
  const DatasetManifest manifest = resolve_manifest(config, split_or(o, config.eval_split));
  std::int64_t unpredicted = 0;
  const StreamScores fused = fuse_manifest(manifest, scores, config.fusion, &unpredicted);
  save_scores_csv(dir / "fused_scores.csv", fused);
  out << "fused " << fused.rows.size() << " frames, unpredicted=" << unpredicted << '\n';
  return kExitOk;
}

int cmd_eval(const CommonOptions& o, const std::string& v, const std::string& t, const std::string& a,
             std::ostream& out) {
  const RunConfig config = resolve_config(o);
  const fs::path dir = ensure_dir(o.out);
  const auto scores = load_stream_files(v, t, a);
  const DatasetManifest manifest = resolve_manifest(config, split_or(o, config.eval_split));
  const EvaluationReport report = evaluate(manifest, scores, config.fusion);
  std::ofstream text(dir / "report.txt", std::ios::binary), kv(dir / "report.kv", std::ios::binary);
  if (!text || !kv) throw IoError("cannot write report in " + dir.string());
  write_report_text(text, report);
  kv << "seed=" << config.seed << '\n';
  write_report_kv(kv, report);
  write_report_text(out, report);
  return kExitOk;
}

int cmd_synth(const std::string& dest, const SyntheticOptions& options, std::ostream& out) {
  if (dest.empty()) throw ArgumentError("--out is required");
  write_synthetic_dataset(dest, options);
  out << "wrote synthetic dataset to " << dest << '\n';
  return kExitOk;
}

int cmd_synth_counts(const std::string& dest, Split split, std::ostream& out) {
  if (dest.empty()) throw ArgumentError("--out is required");
  const auto& counts = split == Split::Train ? kReferenceTrainCounts : kReferenceValidationCounts;
  save_manifest(dest, synthetic_count_manifest(counts, split));
  out << "wrote count manifest to " << dest << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Three-stream facial expression recognition pipeline", "fer"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string image_a, image_b, wav, checkpoint, stream, visual, temporal, audio, dest;
  std::optional<double> start;
  double duration = 2.0;
  bool images = false;
  std::optional<int> epochs;
  SyntheticOptions synth;
  std::string synth_split = "train";

  auto* stats = app.add_subcommand("stats", "Class distribution of a split");
  add_common(stats, common, true);

  auto* manifest = app.add_subcommand("manifest", "Build a manifest file from a dataset root");
  add_common(manifest, common, true);
  manifest->add_option("--out", dest, "Destination manifest file")->required();

  auto* preview = app.add_subcommand("preview-augment", "Write the eight half-mix variants of an image pair");
  add_common(preview, common, false);
  preview->add_option("--image-a", image_a, "Input image")->required();
  preview->add_option("--image-b", image_b, "Reference image")->required();
  preview->add_option("--out", common.out, "Output directory")->required();

  auto* melspec = app.add_subcommand("melspec", "Log-mel spectrograms of 2 s windows of a WAV file");
  add_common(melspec, common, false);
  melspec->add_option("--wav", wav, "16-bit PCM WAV file")->required();
  melspec->add_option("--start", start, "Start of a single window in seconds");
  melspec->add_option("--duration", duration, "Window length in seconds");
  melspec->add_flag("--image", images, "Also write the 224x224 spectrogram image as PNG");
  melspec->add_option("--out", common.out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train one stream head");
  add_common(train_cmd, common, true);
  train_cmd->add_option("--stream", stream, "visual, temporal or audio")->required();
  train_cmd->add_option("--epochs", epochs, "Override train.epochs");
  train_cmd->add_option("--out", common.out, "Output directory")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Score every sampling window of a split");
  add_common(predict_cmd, common, true);
  predict_cmd->add_option("--stream", stream, "visual, temporal or audio")->required();
  predict_cmd->add_option("--checkpoint", checkpoint, "Head checkpoint")->required();
  predict_cmd->add_option("--out", common.out, "Output directory")->required();

  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse per-stream scores on the frame timeline");
  auto* eval_cmd = app.add_subcommand("eval", "Per-stream and fused macro F1 report");
  for (auto* cmd : {fuse_cmd, eval_cmd}) {
    add_common(cmd, common, true);
    cmd->add_option("--visual", visual, "Visual stream score CSV");
    cmd->add_option("--temporal", temporal, "Temporal stream score CSV");
    cmd->add_option("--audio", audio, "Audio stream score CSV");
    cmd->add_option("--out", common.out, "Output directory")->required();
  }

  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic three-stream dataset");
  synth_cmd->add_option("--out", dest, "Dataset root to create")->required();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--train-videos", synth.train_videos);
  synth_cmd->add_option("--validation-videos", synth.validation_videos);
  synth_cmd->add_option("--frames", synth.frames_per_video, "Frames per video");

  auto* counts_cmd = app.add_subcommand("synth-counts", "Write a manifest with the reference class counts");
  counts_cmd->add_option("--out", dest, "Destination manifest file")->required();
  counts_cmd->add_option("--split", synth_split, "train or validation");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitDataError;
  }

  try {
    if (*stats) return cmd_stats(common, out);
    if (*manifest) return cmd_manifest(common, dest, out);
    if (*preview) return cmd_preview(common, image_a, image_b, out);
    if (*melspec) return cmd_melspec(common, wav, start, duration, images, out);
    if (*train_cmd) return cmd_train(common, stream, epochs, out);
    if (*predict_cmd) return cmd_predict(common, stream, checkpoint, out);
    if (*fuse_cmd) return cmd_fuse(common, visual, temporal, audio, out);
    if (*eval_cmd) return cmd_eval(common, visual, temporal, audio, out);
    if (*synth_cmd) return cmd_synth(dest, synth, out);
    if (*counts_cmd) return cmd_synth_counts(dest, parse_split(synth_split), out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  err << "no command given\n";
  return kExitDataError;
}

}  // namespace fer
