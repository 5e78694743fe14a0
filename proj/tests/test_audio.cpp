#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fer/audio.hpp"
#include "fer/error.hpp"
#include "fer/rng.hpp"
#include "fer/wav.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fer;

namespace {

constexpr double kPi = std::numbers::pi;

AudioClip sine(double hz, double seconds, double amplitude = 0.5, int rate = 16000) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] = amplitude * std::sin(2 * kPi * hz * static_cast<double>(i) / rate);
  return clip;
}

double mel_formula(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

}  // namespace

TEST_CASE("stft of silence is zero") {
  AudioClip clip;
  clip.samples.assign(4096, 0.0);
  const Grid g = stft_magnitude(clip, MelConfig{});
  CHECK(g.rows == 513);
  CHECK(g.cols == 1 + (4096 - 1024) / 256);
  for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("stft matches a direct DFT") {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    AudioClip clip;
    clip.samples.resize(1024);
    for (auto& s : clip.samples) s = rng.uniform(-1, 1);
    const Grid g = stft_magnitude(clip, MelConfig{});
    REQUIRE(g.cols == 1);
    const auto ref = fer::testing::dft_magnitude(clip.samples);
    double worst = 0;
    for (int k = 0; k < g.rows; ++k) worst = std::max(worst, std::abs(g.at(k, 0) - ref[k]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("bin-centered sine peaks at its bin") {
  for (int k0 : {5, 28, 100, 400}) {
    const Grid g = stft_magnitude(sine(k0 * 16000.0 / 1024, 0.25), MelConfig{});
    for (int t = 0; t < g.cols; ++t) {
      int best = 0;
      for (int k = 1; k < g.rows; ++k)
        if (g.at(k, t) > g.at(best, t)) best = k;
      CHECK(best == k0);
    }
  }
}

TEST_CASE("stft is linear in amplitude") {
  Rng rng(2);
  AudioClip clip;
  clip.samples.resize(3000);
  for (auto& s : clip.samples) s = rng.uniform(-0.4, 0.4);
  AudioClip scaled = clip;
  for (auto& s : scaled.samples) s *= 2.5;
  const Grid a = stft_magnitude(clip, MelConfig{}), b = stft_magnitude(scaled, MelConfig{});
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(std::abs(b.values[i] - 2.5 * a.values[i]) <= 1e-9 * std::max(1.0, b.values[i]));
}

TEST_CASE("stft rejects short clips") {
  AudioClip clip;
  clip.samples.resize(1000);
  CHECK_THROWS_AS(stft_magnitude(clip, MelConfig{}), ArgumentError);
}

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-5));
  for (double f = 0; f < 8000; f += 37.5) {
    CHECK(hz_to_mel(f + 1) > hz_to_mel(f));
    CHECK(mel_to_hz(hz_to_mel(f)) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("filterbank shape") {
  const MelConfig cfg;
  const Grid fb = mel_filterbank(cfg, 16000);
  REQUIRE(fb.rows == 128);
  REQUIRE(fb.cols == 513);
  const auto centers = mel_center_frequencies(cfg, 16000);
  for (std::size_t m = 1; m < centers.size(); ++m) CHECK(centers[m] > centers[m - 1]);

  for (int m = 0; m < fb.rows; ++m) {
    double sum = 0, peak = 0;
    for (int k = 0; k < fb.cols; ++k) {
      CHECK(fb.at(m, k) >= 0.0);
      sum += fb.at(m, k);
      peak = std::max(peak, fb.at(m, k));
    }
    CHECK(sum > 0.0);
    int at_peak = 0;
    for (int k = 0; k < fb.cols; ++k) at_peak += fb.at(m, k) == peak;
    CHECK(at_peak == 1);

    // Unimodal on a fine grid: once falling, never rising again.
    bool falling = false;
    double prev = -1;
    for (double hz = 0; hz <= 8000; hz += 0.5) {
      const double r = mel_filter_response(cfg, 16000, m, hz);
      if (r < prev) falling = true;
      if (falling) CHECK(r <= prev);
      prev = r;
    }
  }
  for (int k = 1; k < fb.cols - 1; ++k) {
    double cover = 0;
    for (int m = 0; m < fb.rows; ++m) cover += fb.at(m, k);
    CHECK(cover > 0.0);
  }
}

TEST_CASE("filter peaks sit on equally spaced mel points") {
  MelConfig cfg;
  cfg.n_mels = 10;
  cfg.f_min = 100;
  cfg.f_max = 4000;
  const auto centers = mel_center_frequencies(cfg, 16000);
  const double lo = mel_formula(100), hi = mel_formula(4000);
  for (int m = 0; m < 10; ++m) CHECK(mel_formula(centers[m]) == doctest::Approx(lo + (hi - lo) * (m + 1) / 11.0));
}

TEST_CASE("silence maps to the log floor") {
  AudioClip clip;
  clip.samples.assign(32000, 0.0);
  auto g = mel_spectrogram(clip, MelConfig{});
  CHECK(g.n_mels() == 128);
  CHECK(g.n_frames() == 1 + (32000 - 1024) / 256);
  for (double v : g.energies.values) CHECK(v == std::log(1e-6));
}

TEST_CASE("440 Hz peaks in the filter that contains it") {
  const int expected = fer::testing::strongest_mel_filter(440.0, 128, 8000.0);
  auto g = mel_spectrogram(sine(440, 2.0), MelConfig{});
  for (int t = 0; t < g.n_frames(); ++t) {
    int arg = 0;
    for (int m = 1; m < g.n_mels(); ++m)
      if (g.energies.at(m, t) > g.energies.at(arg, t)) arg = m;
    CHECK(arg == expected);
  }
}

TEST_CASE("doubling amplitude raises every non-floor cell") {
  Rng rng(3);
  AudioClip clip;
  clip.samples.resize(8000);
  for (auto& s : clip.samples) s = rng.uniform(-0.2, 0.2);
  AudioClip loud = clip;
  for (auto& s : loud.samples) s *= 2;
  auto a = mel_spectrogram(clip, MelConfig{}), b = mel_spectrogram(loud, MelConfig{});
  const double floor = std::log(1e-6);
  for (std::size_t i = 0; i < a.energies.values.size(); ++i)
    if (a.energies.values[i] > floor + 1e-9) CHECK(b.energies.values[i] > a.energies.values[i]);
  auto again = mel_spectrogram(clip, MelConfig{});
  CHECK(again.energies.values == a.energies.values);
}

TEST_CASE("mel_spectrogram requires the configured rate") {
  CHECK_THROWS_AS(mel_spectrogram(sine(440, 1.0, 0.5, 8000), MelConfig{}), ArgumentError);
}

TEST_CASE("spectrogram image normalization") {
  SpectrogramGrid flat;
  flat.energies = Grid(16, 20, -3.0);
  const Image img = spectrogram_to_image(flat);
  CHECK(img.height() == 224);
  CHECK(img.width() == 224);
  CHECK(img.channels() == 3);
  for (float v : img.values()) CHECK(v == 0.5f);

  auto g = mel_spectrogram(sine(1000, 2.0), MelConfig{});
  const Image s = spectrogram_to_image(g);
  const auto [lo, hi] = std::minmax_element(s.values().begin(), s.values().end());
  CHECK(*lo == 0.0f);
  CHECK(*hi == 1.0f);
  CHECK(s.height() == 224);

  // Low frequencies at the bottom.
  SpectrogramGrid ramp;
  ramp.energies = Grid(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) ramp.energies.at(r, c) = r;
  const Image r = spectrogram_to_image(ramp, 4, 4);
  CHECK(r.at(3, 0, 0) == 0.0f);
  CHECK(r.at(0, 0, 0) == 1.0f);
}

TEST_CASE("extract_window") {
  const AudioClip full = sine(300, 5.0);
  auto w = extract_window(full, 0.0);
  CHECK(w.samples.size() == 32000);
  CHECK(!w.padded);

  auto tail = extract_window(full, 4.0);
  REQUIRE(tail.samples.size() == 32000);
  CHECK(tail.padded);
  CHECK(std::equal(tail.samples.begin(), tail.samples.begin() + 16000, full.samples.begin() + 64000));
  CHECK(std::all_of(tail.samples.begin() + 16000, tail.samples.end(), [](double s) { return s == 0.0; }));

  CHECK_THROWS_AS(extract_window(full, 5.0), WindowRangeError);
  CHECK_THROWS_AS(extract_window(full, -1.0), ArgumentError);
}

TEST_CASE("linear resampling") {
  const AudioClip clip = sine(100, 1.0, 0.5, 8000);
  const AudioClip up = resample_linear(clip, 16000);
  CHECK(up.sample_rate == 16000);
  CHECK(up.samples.size() == 16000);
  for (std::size_t i = 0; i + 2 < up.samples.size(); i += 2) CHECK(up.samples[i] == clip.samples[i / 2]);
  CHECK(resample_linear(up, 16000).samples == up.samples);
}

TEST_CASE("MELS round-trip") {
  auto g = mel_spectrogram(sine(700, 1.0), MelConfig{});
  std::stringstream ss;
  write_mels(ss, g);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "MELS");
  CHECK(bytes.size() == 12 + 4 * g.energies.values.size());
  auto back = read_mels(ss);
  REQUIRE(back.n_mels() == g.n_mels());
  REQUIRE(back.n_frames() == g.n_frames());
  for (std::size_t i = 0; i < g.energies.values.size(); ++i)
    CHECK(back.energies.values[i] == static_cast<float>(g.energies.values[i]));

  std::istringstream bad("MELZ");
  CHECK_THROWS_AS(read_mels(bad), IoError);
}

TEST_CASE("WAV round-trip and stereo downmix") {
  fer::testing::TempDir dir("wav");
  AudioClip clip = sine(440, 0.1);
  write_wav(dir / "a.wav", clip);
  const auto info = read_wav_info(dir / "a.wav");
  CHECK(info.sample_rate == 16000);
  CHECK(info.channels == 1);
  CHECK(info.bits_per_sample == 16);
  CHECK(info.frames == clip.samples.size());
  const AudioClip back = read_wav(dir / "a.wav");
  for (std::size_t i = 0; i < clip.samples.size(); ++i) CHECK(std::abs(back.samples[i] - clip.samples[i]) < 1.0 / 32767);

  // Hand-built stereo file: left 0.5, right -0.25 full scale.
  std::string data;
  auto u16 = [&](std::uint16_t v) { data += static_cast<char>(v & 0xff); data += static_cast<char>(v >> 8); };
  auto u32 = [&](std::uint32_t v) { u16(v & 0xffff); u16(v >> 16); };
  const std::int16_t l = 16384, r = -8192;
  data += "RIFF";
  u32(36 + 8);
  data += "WAVEfmt ";
  u32(16);
  u16(1);
  u16(2);
  u32(8000);
  u32(8000 * 4);
  u16(4);
  u16(16);
  data += "data";
  u32(8);
  for (int i = 0; i < 2; ++i) {
    u16(static_cast<std::uint16_t>(l));
    u16(static_cast<std::uint16_t>(r));
  }
  fer::testing::spit(dir / "s.wav", data);
  const AudioClip st = read_wav(dir / "s.wav");
  CHECK(st.sample_rate == 8000);
  REQUIRE(st.samples.size() == 2);
  CHECK(st.samples[0] == doctest::Approx((16384.0 - 8192.0) / 2 / 32768.0).epsilon(1e-4));

  fer::testing::spit(dir / "bad.wav", "RIFX0000WAVE");
  CHECK_THROWS_AS(read_wav(dir / "bad.wav"), IoError);
}
