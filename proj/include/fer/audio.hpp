#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fer/image.hpp"

namespace fer {

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
  bool padded = false;  // tail was zero-filled by extract_window

  double duration() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

struct MelConfig {
  int sample_rate = 16000;  // clips are resampled to this rate first
  int n_fft = 1024;
  int hop = 256;
  int n_mels = 128;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means sample_rate / 2
  double log_floor = 1e-6;

  double upper_frequency(int rate) const noexcept { return f_max > 0.0 ? f_max : rate / 2.0; }
  // Throws ArgumentError when the configuration is unusable at the given rate.
  void validate(int rate) const;
};

// Dense row-major matrix of doubles.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}
  double& at(int r, int c) noexcept { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const noexcept { return values[static_cast<std::size_t>(r) * cols + c]; }
};

struct SpectrogramGrid {
  Grid energies;  // n_mels x n_frames, natural-log energies
  MelConfig config;
  std::string video_id;
  int window_index = 0;

  int n_mels() const noexcept { return energies.rows; }
  int n_frames() const noexcept { return energies.cols; }
};

int stft_frame_count(std::size_t length, const MelConfig& config);

std::vector<double> hann_window(int n);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<double>& re, std::vector<double>& im);

// (n_fft / 2 + 1) x n_frames magnitudes of the Hann-windowed frames.
Grid stft_magnitude(const AudioClip& clip, const MelConfig& config);

double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

// Peak frequency of every filter (n_mels points equally spaced in mel).
std::vector<double> mel_center_frequencies(const MelConfig& config, int sample_rate);
// Triangular response of filter m at an arbitrary frequency.
double mel_filter_response(const MelConfig& config, int sample_rate, int m, double hz);
// n_mels x (n_fft / 2 + 1).
Grid mel_filterbank(const MelConfig& config, int sample_rate);

// log(filterbank * |STFT|^2 + log_floor). The clip must already be at config.sample_rate.
SpectrogramGrid mel_spectrogram(const AudioClip& clip, const MelConfig& config);

// Min-max normalize (constant grid gives 0.5), replicate to 3 channels, resize.
// Rows are flipped so low frequencies sit at the bottom of the image.
Image spectrogram_to_image(const SpectrogramGrid& grid, int out_h = 224, int out_w = 224);

AudioClip extract_window(const AudioClip& full, double start_sec, double duration_sec = 2.0);
AudioClip resample_linear(const AudioClip& clip, int target_rate);

// Little-endian "MELS", u32 n_mels, u32 n_frames, f32 row-major values.
void write_mels(std::ostream& out, const SpectrogramGrid& grid);
SpectrogramGrid read_mels(std::istream& in);
void save_mels(const std::filesystem::path& path, const SpectrogramGrid& grid);
SpectrogramGrid load_mels(const std::filesystem::path& path);

}  // namespace fer
