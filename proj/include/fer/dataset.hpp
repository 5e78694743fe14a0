#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fer/expression.hpp"

namespace fer {

// Frame rate as a positive rational, e.g. 30/1 or 30000/1001.
struct Rational {
  std::int64_t num = 30;
  std::int64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);

struct FrameRecord {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::string image_path;
  Expression label = Expression::Unlabeled;

  bool operator==(const FrameRecord&) const = default;
};

struct VideoRecord {
  std::string video_id;
  Rational fps;
  std::vector<FrameRecord> frames;  // sorted by frame_index
  std::optional<std::string> audio_path;
  int audio_sample_rate = 16000;

  // Length of the 0-based frame timeline: last frame index + 1.
  std::int64_t timeline_length() const noexcept {
    return frames.empty() ? 0 : frames.back().frame_index + 1;
  }
  const FrameRecord* find_frame(std::int64_t frame_index) const;

  bool operator==(const VideoRecord&) const = default;
};

enum class Split { Train, Validation };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct DatasetManifest {
  Split split = Split::Train;
  std::vector<VideoRecord> videos;

  const VideoRecord* find_video(std::string_view video_id) const;
  std::size_t frame_count() const noexcept;

  bool operator==(const DatasetManifest&) const = default;
};

struct ClassDistribution {
  std::array<std::int64_t, kNumClasses> counts{};
  std::array<double, kNumClasses> ratios{};
  std::int64_t total = 0;
};

struct SamplingWindow {
  std::string video_id;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // exclusive
  std::vector<std::int64_t> selected;

  bool operator==(const SamplingWindow&) const = default;
};

struct SamplingPlan {
  Stream stream = Stream::Visual;
  std::vector<SamplingWindow> windows;
};

inline constexpr int kTemporalShotLength = 16;
inline constexpr int kAudioWindowSeconds = 2;

// One label per line after the header line. expected_frame_count is only used
// to warn about a mismatch; the caller decides how to truncate or pad.
std::vector<Expression> parse_annotation_file(std::string_view text,
                                              std::size_t expected_frame_count);
std::string render_annotation_file(std::span<const Expression> labels);

// Reads <root>/<split>/... (see README for the layout).
DatasetManifest build_manifest(const std::filesystem::path& root, Split split,
                               Rational fps = {});

ClassDistribution class_distribution(const DatasetManifest& manifest);

// Keeps ceil(fraction * count) frames of every class; unlabeled frames are dropped.
DatasetManifest subsample_per_class(const DatasetManifest& manifest, double fraction,
                                    std::uint64_t seed);

SamplingPlan sample_visual_frames(const VideoRecord& video);
// Uniform stride by default; a seed switches to a sorted random 16-subset.
SamplingPlan sample_temporal_shots(const VideoRecord& video,
                                   std::optional<std::uint64_t> random_seed = std::nullopt);
SamplingPlan sample_audio_windows(const VideoRecord& video);
SamplingPlan sample_stream(Stream stream, const VideoRecord& video);

// Audio interval in seconds covered by a window of frames.
std::pair<double, double> window_seconds(const SamplingWindow& window, const Rational& fps);

// Majority label over the labeled frames of a window; ties go to the lowest
// class index. Unlabeled when the window holds no labeled frame.
Expression window_label(const VideoRecord& video, const SamplingWindow& window);

// Tab-separated: video_id, frame_index, image_path, label, audio_path, fps.
void write_manifest(std::ostream& out, const DatasetManifest& manifest);
DatasetManifest read_manifest(std::istream& in, Split split);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path, Split split);

}  // namespace fer
