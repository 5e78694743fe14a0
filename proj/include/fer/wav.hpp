#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace fer {

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::size_t frames = 0;
};

struct AudioClip;

// 16-bit PCM RIFF/WAVE only. Multi-channel input is averaged to mono.
WavInfo read_wav_info(const std::filesystem::path& path);
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace fer
