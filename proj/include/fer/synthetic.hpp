#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "fer/dataset.hpp"

namespace fer {

// Training-split class counts of the reference corpus, in class order.
inline constexpr std::array<std::int64_t, kNumClasses> kReferenceTrainCounts = {
    175500, 16356, 10725, 9080, 89917, 79140, 30096, 163189};
inline constexpr std::array<std::int64_t, kNumClasses> kReferenceValidationCounts = {
    82099, 6056, 10725, 8388, 33581, 24633, 12302, 103833};

// Manifest with exactly the given number of frames per class, packed into
// videos of at most frames_per_video frames. No files are created.
DatasetManifest synthetic_count_manifest(const std::array<std::int64_t, kNumClasses>& counts, Split split,
                                         std::int64_t frames_per_video = 3000);

// Three-stream synthetic corpus. The class code is three bits
// (class = 4*b2 + 2*b1 + b0), constant over segments of segment_frames:
//   frames carry b0 (red, upper half) and b1 (green, lower half) under a
//   per-frame offset noise, so one frame is ambiguous but a 16-frame shot is not;
//   the audio track carries b2 as the pitch of a tone.
// Visual and temporal therefore cannot separate b2, audio only separates b2.
struct SyntheticOptions {
  int train_videos = 5;
  int validation_videos = 3;
  int frames_per_video = 256;
  int segment_frames = 32;
  int frame_size = 56;
  Rational fps{16, 1};
  int audio_rate = 16000;
  double bit_amplitude = 0.1;
  double frame_noise = 0.25;
  double pixel_noise = 0.05;
  double tone_amplitude = 0.3;
  double audio_noise = 0.05;
  std::uint64_t seed = 7;
};

// Writes <root>/train and <root>/validation in the dataset layout.
void write_synthetic_dataset(const std::filesystem::path& root, const SyntheticOptions& options);

}  // namespace fer
