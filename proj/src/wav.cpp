#include "fer/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "fer/audio.hpp"

namespace fer {

namespace {

struct WavLayout {
  WavInfo info;
  std::streamoff data_offset = 0;
};

WavLayout parse_header(std::istream& in, const std::filesystem::path& path) {
  char tag[4];
  if (!in.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0) throw IoError("not a RIFF file: " + path.string());
  detail::get_u32(in);
  if (!in.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0) throw IoError("not a WAVE file: " + path.string());

  WavLayout layout;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const std::uint32_t size = detail::get_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const auto format = detail::get_u16(in);
      layout.info.channels = detail::get_u16(in);
      layout.info.sample_rate = static_cast<int>(detail::get_u32(in));
      detail::get_u32(in);  // byte rate
      detail::get_u16(in);  // block align
      layout.info.bits_per_sample = detail::get_u16(in);
      if (format != 1 && format != 0xFFFE) throw IoError("unsupported WAV encoding in " + path.string());
      in.seekg(static_cast<std::streamoff>(size) - 16 + (size & 1), std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw IoError("WAV data chunk before fmt chunk in " + path.string());
      if (layout.info.bits_per_sample != 16 || layout.info.channels <= 0 || layout.info.sample_rate <= 0)
        throw IoError("only 16-bit PCM WAV is supported: " + path.string());
      layout.info.frames = size / (2u * static_cast<unsigned>(layout.info.channels));
      layout.data_offset = in.tellg();
      return layout;
    } else {
      in.seekg(static_cast<std::streamoff>(size + (size & 1)), std::ios::cur);
    }
  }
  throw IoError("WAV file has no data chunk: " + path.string());
}

}  // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return parse_header(in, path).info;
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  const auto layout = parse_header(in, path);
  const int ch = layout.info.channels;
  std::vector<char> raw(layout.info.frames * ch * 2);
  in.seekg(layout.data_offset);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
    throw IoError("truncated WAV data in " + path.string());

  AudioClip clip;
  clip.sample_rate = layout.info.sample_rate;
  clip.samples.resize(layout.info.frames);
  for (std::size_t i = 0; i < layout.info.frames; ++i) {
    double sum = 0.0;
    for (int c = 0; c < ch; ++c) {
      const std::size_t k = (i * ch + c) * 2;
      const auto v = static_cast<std::int16_t>(static_cast<unsigned char>(raw[k]) |
                                               (static_cast<unsigned char>(raw[k + 1]) << 8));
      sum += v / 32768.0;
    }
    clip.samples[i] = sum / ch;
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  detail::put_u32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out.write("data", 4);
  detail::put_u32(out, data_bytes);
  for (double s : clip.samples) {
    const long v = std::lround(std::clamp(s, -1.0, 1.0) * 32767.0);
    detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
}

}  // namespace fer
