#include "fer/audio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"
#include "fer/error.hpp"

namespace fer {

void MelConfig::validate(int rate) const {
  if (rate <= 0) throw ArgumentError("sample rate must be positive");
  if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0) throw ArgumentError("n_fft must be a power of two >= 2");
  if (hop < 1 || hop > n_fft) throw ArgumentError("hop must lie in [1, n_fft]");
  if (n_mels < 2) throw ArgumentError("n_mels must be >= 2");
  if (!(log_floor > 0.0)) throw ArgumentError("log_floor must be positive");
  const double hi = upper_frequency(rate);
  if (!(f_min >= 0.0 && f_min < hi && hi <= rate / 2.0))
    throw ArgumentError("mel band must satisfy 0 <= f_min < f_max <= sample_rate / 2");
}

int stft_frame_count(std::size_t length, const MelConfig& config) {
  if (length < static_cast<std::size_t>(config.n_fft)) return 0;
  return 1 + static_cast<int>((length - config.n_fft) / config.hop);
}

std::vector<double> hann_window(int n) {
  // Periodic Hann, the usual choice for spectral analysis.
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

void fft_inplace(std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = re.size();
  if (im.size() != n || n == 0 || (n & (n - 1)) != 0) throw ArgumentError("fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles from cos/sin directly rather than by recurrence, so rounding
      // error does not accumulate across the butterfly span.
      const double wr = std::cos(ang * static_cast<double>(k));
      const double wi = std::sin(ang * static_cast<double>(k));
      for (std::size_t i = k; i < n; i += len) {
        const std::size_t j = i + half;
        const double tr = re[j] * wr - im[j] * wi;
        const double ti = re[j] * wi + im[j] * wr;
        re[j] = re[i] - tr;
        im[j] = im[i] - ti;
        re[i] += tr;
        im[i] += ti;
      }
    }
  }
}

Grid stft_magnitude(const AudioClip& clip, const MelConfig& config) {
  config.validate(clip.sample_rate);
  if (clip.samples.size() < static_cast<std::size_t>(config.n_fft))
    throw ArgumentError("clip shorter than n_fft");
  const int n = config.n_fft;
  const int bins = n / 2 + 1;
  const int frames = stft_frame_count(clip.samples.size(), config);
  const auto window = hann_window(n);

  Grid out(bins, frames);
  std::vector<double> re(n), im(n);
  for (int t = 0; t < frames; ++t) {
    const double* x = clip.samples.data() + static_cast<std::size_t>(t) * config.hop;
    for (int i = 0; i < n; ++i) {
      re[i] = window[i] * x[i];
      im[i] = 0.0;
    }
    fft_inplace(re, im);
    for (int k = 0; k < bins; ++k) out.at(k, t) = std::hypot(re[k], im[k]);
  }
  return out;
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// n_mels + 2 band edges equally spaced on the mel scale.
std::vector<double> band_edges(const MelConfig& config, int sample_rate) {
  const double lo = hz_to_mel(config.f_min);
  const double hi = hz_to_mel(config.upper_frequency(sample_rate));
  std::vector<double> edges(static_cast<std::size_t>(config.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(config.n_mels + 1));
  return edges;
}

double triangle(double left, double center, double right, double hz) {
  if (hz <= left || hz >= right) return 0.0;
  return hz <= center ? (hz - left) / (center - left) : (right - hz) / (right - center);
}

}  // namespace

std::vector<double> mel_center_frequencies(const MelConfig& config, int sample_rate) {
  const auto edges = band_edges(config, sample_rate);
  return {edges.begin() + 1, edges.end() - 1};
}

double mel_filter_response(const MelConfig& config, int sample_rate, int m, double hz) {
  const auto edges = band_edges(config, sample_rate);
  return triangle(edges[m], edges[m + 1], edges[m + 2], hz);
}

Grid mel_filterbank(const MelConfig& config, int sample_rate) {
  config.validate(sample_rate);
  const auto edges = band_edges(config, sample_rate);
  const int bins = config.n_fft / 2 + 1;
  Grid fb(config.n_mels, bins);
  for (int m = 0; m < config.n_mels; ++m)
    for (int k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate / config.n_fft;
      fb.at(m, k) = triangle(edges[m], edges[m + 1], edges[m + 2], hz);
    }
  return fb;
}

SpectrogramGrid mel_spectrogram(const AudioClip& clip, const MelConfig& config) {
  if (clip.sample_rate != config.sample_rate)
    throw ArgumentError("clip sample rate " + std::to_string(clip.sample_rate) +
                        " does not match mel config rate " + std::to_string(config.sample_rate));
  const Grid mag = stft_magnitude(clip, config);
  const Grid fb = mel_filterbank(config, clip.sample_rate);
  SpectrogramGrid grid;
  grid.config = config;
  grid.energies = Grid(config.n_mels, mag.cols);
  for (int m = 0; m < config.n_mels; ++m)
    for (int t = 0; t < mag.cols; ++t) {
      double e = 0.0;
      for (int k = 0; k < mag.rows; ++k) {
        const double w = fb.at(m, k);
        if (w != 0.0) e += w * mag.at(k, t) * mag.at(k, t);
      }
      grid.energies.at(m, t) = std::log(e + config.log_floor);
    }
  return grid;
}

namespace {

Grid resize_grid(const Grid& in, int out_h, int out_w) {
  auto taps = [](int n_in, int n_out) {
    std::vector<std::pair<int, double>> t(static_cast<std::size_t>(n_out));
    const double scale = static_cast<double>(n_in) / n_out;
    for (int i = 0; i < n_out; ++i) {
      const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(src));
      t[i] = {i0, src - i0};
    }
    return t;
  };
  const auto ys = taps(in.rows, out_h);
  const auto xs = taps(in.cols, out_w);
  Grid out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const auto [y0, wy] = ys[y];
    const int y1 = std::min(y0 + 1, in.rows - 1);
    for (int x = 0; x < out_w; ++x) {
      const auto [x0, wx] = xs[x];
      const int x1 = std::min(x0 + 1, in.cols - 1);
      const double top = (1 - wx) * in.at(y0, x0) + wx * in.at(y0, x1);
      const double bottom = (1 - wx) * in.at(y1, x0) + wx * in.at(y1, x1);
      out.at(y, x) = (1 - wy) * top + wy * bottom;
    }
  }
  return out;
}

}  // namespace

Image spectrogram_to_image(const SpectrogramGrid& grid, int out_h, int out_w) {
  if (grid.energies.rows < 1 || grid.energies.cols < 1) throw ArgumentError("empty spectrogram");
  if (out_h < 1 || out_w < 1) throw ArgumentError("output dims must be >= 1");
  // Resampling happens before normalization so the output spans exactly [0, 1].
  Grid flipped(grid.energies.rows, grid.energies.cols);
  for (int r = 0; r < flipped.rows; ++r)
    for (int c = 0; c < flipped.cols; ++c) flipped.at(r, c) = grid.energies.at(flipped.rows - 1 - r, c);
  const Grid resized = resize_grid(flipped, out_h, out_w);
  const auto [lo_it, hi_it] = std::minmax_element(resized.values.begin(), resized.values.end());
  const double lo = *lo_it, hi = *hi_it;

  Image image(out_h, out_w, 3);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const float v = hi > lo ? static_cast<float>((resized.at(y, x) - lo) / (hi - lo)) : 0.5f;
      for (int c = 0; c < 3; ++c) image.at(y, x, c) = v;
    }
  return image;
}

AudioClip extract_window(const AudioClip& full, double start_sec, double duration_sec) {
  if (!(start_sec >= 0.0)) throw ArgumentError("window start must be >= 0");
  if (!(duration_sec > 0.0)) throw ArgumentError("window duration must be positive");
  const auto begin = static_cast<std::size_t>(std::llround(start_sec * full.sample_rate));
  const auto end = static_cast<std::size_t>(std::llround((start_sec + duration_sec) * full.sample_rate));
  if (begin >= full.samples.size())
    throw WindowRangeError("audio window starting at " + std::to_string(start_sec) +
                           " s lies beyond the end of the audio (" + std::to_string(full.duration()) + " s)");
  AudioClip out;
  out.sample_rate = full.sample_rate;
  out.samples.assign(end - begin, 0.0);
  const std::size_t available = std::min(end, full.samples.size()) - begin;
  std::copy_n(full.samples.begin() + static_cast<std::ptrdiff_t>(begin), available, out.samples.begin());
  out.padded = available < out.samples.size();
  return out;
}

AudioClip resample_linear(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0 || clip.sample_rate <= 0) throw ArgumentError("sample rates must be positive");
  if (clip.sample_rate == target_rate) return clip;
  AudioClip out;
  out.sample_rate = target_rate;
  out.padded = clip.padded;
  const std::size_t n = clip.samples.size();
  if (n == 0) return out;
  const auto m = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * target_rate / static_cast<double>(clip.sample_rate)));
  out.samples.resize(m);
  const double step = static_cast<double>(clip.sample_rate) / target_rate;
  for (std::size_t i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) * step;
    const auto i0 = std::min(static_cast<std::size_t>(t), n - 1);
    const auto i1 = std::min(i0 + 1, n - 1);
    const double w = t - static_cast<double>(i0);
    out.samples[i] = (1.0 - w) * clip.samples[i0] + w * clip.samples[i1];
  }
  return out;
}

void write_mels(std::ostream& out, const SpectrogramGrid& grid) {
  out.write("MELS", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(grid.n_mels()));
  detail::put_u32(out, static_cast<std::uint32_t>(grid.n_frames()));
  for (double v : grid.energies.values) detail::put_f32(out, static_cast<float>(v));
}

SpectrogramGrid read_mels(std::istream& in) {
  detail::expect_magic(in, "MELS");
  const auto rows = detail::get_u32(in);
  const auto cols = detail::get_u32(in);
  if (rows == 0 || cols == 0 || rows > (1u << 16) || cols > (1u << 24)) throw IoError("bad MELS dimensions");
  SpectrogramGrid grid;
  grid.energies = Grid(static_cast<int>(rows), static_cast<int>(cols));
  grid.config.n_mels = static_cast<int>(rows);
  for (auto& v : grid.energies.values) v = detail::get_f32(in);
  return grid;
}

void save_mels(const std::filesystem::path& path, const SpectrogramGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_mels(out, grid);
}

SpectrogramGrid load_mels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_mels(in);
}

}  // namespace fer
