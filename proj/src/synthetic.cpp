#include "fer/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "fer/audio.hpp"
#include "fer/error.hpp"
#include "fer/image.hpp"
#include "fer/rng.hpp"
#include "fer/wav.hpp"

namespace fs = std::filesystem;

namespace fer {

DatasetManifest synthetic_count_manifest(const std::array<std::int64_t, kNumClasses>& counts, Split split,
                                         std::int64_t frames_per_video) {
  if (frames_per_video < 1) throw ArgumentError("frames_per_video must be positive");
  DatasetManifest manifest;
  manifest.split = split;
  VideoRecord* video = nullptr;
  char name[64];
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[c] < 0) throw ArgumentError("class counts must be non-negative");
    for (std::int64_t i = 0; i < counts[c]; ++i) {
      if (!video || static_cast<std::int64_t>(video->frames.size()) == frames_per_video) {
        std::snprintf(name, sizeof name, "synthetic_%04zu", manifest.videos.size());
        manifest.videos.push_back({});
        video = &manifest.videos.back();
        video->video_id = name;
      }
      const auto index = static_cast<std::int64_t>(video->frames.size());
      char path[96];
      std::snprintf(path, sizeof path, "%s/frames/%05lld.jpg", name, static_cast<long long>(index));
      video->frames.push_back({video->video_id, index, path, static_cast<Expression>(c)});
    }
  }
  return manifest;
}

namespace {

Image render_frame(int code, int size, const SyntheticOptions& o, Rng& rng) {
  const int b0 = code & 1, b1 = (code >> 1) & 1;
  const double red = 0.5 + o.bit_amplitude * (2 * b0 - 1) + rng.uniform(-o.frame_noise, o.frame_noise);
  const double green = 0.5 + o.bit_amplitude * (2 * b1 - 1) + rng.uniform(-o.frame_noise, o.frame_noise);
  Image img(size, size, 3, 0.5f);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 0.5;
        if (c == 0 && y < size / 2) v = red;
        if (c == 1 && y >= size / 2) v = green;
        v += rng.uniform(-o.pixel_noise, o.pixel_noise);
        img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  return img;
}

void write_split(const fs::path& dir, int videos, const SyntheticOptions& o, std::uint64_t split_seed) {
  fs::create_directories(dir / "annotations");
  fs::create_directories(dir / "audio");
  const int segments_per_video = o.frames_per_video / o.segment_frames;
  const int total_segments = videos * segments_per_video;

  // Balanced class assignment, shuffled.
  std::vector<int> codes(static_cast<std::size_t>(total_segments));
  for (int s = 0; s < total_segments; ++s) codes[s] = s % kNumClasses;
  Rng shuffle(mix_seed(split_seed, 1));
  for (std::size_t i = codes.size(); i > 1; --i) std::swap(codes[i - 1], codes[shuffle.below(i)]);

  for (int v = 0; v < videos; ++v) {
    char id[32];
    std::snprintf(id, sizeof id, "video_%03d", v);
    const fs::path frames_dir = dir / id / "frames";
    fs::create_directories(frames_dir);
    Rng rng(mix_seed(split_seed, 2, static_cast<std::uint64_t>(v)));

    std::vector<Expression> labels;
    for (int f = 0; f < o.frames_per_video; ++f) {
      const int seg = std::min(f / o.segment_frames, segments_per_video - 1);
      const int code = codes[static_cast<std::size_t>(v * segments_per_video + seg)];
      // The first frame of every video is left unannotated.
      labels.push_back(f == 0 ? Expression::Unlabeled : static_cast<Expression>(code));
      char name[32];
      std::snprintf(name, sizeof name, "%05d.jpg", f);
      write_image(frames_dir / name, render_frame(code, o.frame_size, o, rng));
    }
    std::ofstream(dir / "annotations" / (std::string(id) + ".txt"), std::ios::binary)
        << render_annotation_file(labels);

    AudioClip clip;
    clip.sample_rate = o.audio_rate;
    const auto n = static_cast<std::size_t>(std::llround(o.frames_per_video / o.fps.value() * o.audio_rate));
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / o.audio_rate;
      const auto frame = static_cast<int>(std::floor(t * o.fps.value()));
      const int seg = std::min(frame / o.segment_frames, segments_per_video - 1);
      const int code = codes[static_cast<std::size_t>(v * segments_per_video + seg)];
      const double hz = ((code >> 2) & 1) ? 1600.0 : 400.0;
      clip.samples[i] = o.tone_amplitude * std::sin(2.0 * std::numbers::pi * hz * t) +
                        rng.uniform(-o.audio_noise, o.audio_noise);
    }
    write_wav(dir / "audio" / (std::string(id) + ".wav"), clip);
  }
}

}  // namespace

void write_synthetic_dataset(const fs::path& root, const SyntheticOptions& options) {
  if (options.segment_frames < 1 || options.frames_per_video < options.segment_frames)
    throw ArgumentError("frames_per_video must hold at least one segment");
  if (options.frame_size < 8) throw ArgumentError("frame_size must be >= 8");
  write_split(root / "train", options.train_videos, options, mix_seed(options.seed, 100));
  write_split(root / "validation", options.validation_videos, options, mix_seed(options.seed, 200));
}

}  // namespace fer
