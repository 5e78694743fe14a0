#include "fer/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fer/error.hpp"

namespace fer {

SoftLabel one_hot(Expression e) {
  if (!is_labeled(e)) throw ArgumentError("one_hot of an unlabeled frame");
  SoftLabel label{};
  label[index_of(e)] = 1.0;
  return label;
}

void validate_soft_label(const SoftLabel& label) {
  double sum = 0.0;
  for (double p : label) {
    if (!(p >= 0.0)) throw ArgumentError("soft label entries must be non-negative and finite");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("soft label must sum to 1");
}

std::string_view orientation_name(Orientation o) {
  return o == Orientation::Vertical ? "vertical" : "horizontal";
}

std::string_view side_name(KeptSide s) { return s == KeptSide::First ? "first" : "second"; }

int kept_extent(const HalfMixSpec& spec, int height, int width) {
  const int extent = spec.orientation == Orientation::Vertical ? width : height;
  // Small epsilon so that 0.6 * 10 lands on 6 rather than 5.999...
  return static_cast<int>(std::floor(spec.alpha * extent + 1e-9));
}

AugmentedSample half_mix(const Image& input, const SoftLabel& input_label, const Image& reference,
                         const SoftLabel& reference_label, const HalfMixSpec& spec, MaskMode mode,
                         std::string input_id, std::string reference_id) {
  if (!input.same_shape(reference))
    throw ArgumentError("half_mix: input and reference shapes differ");
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw ArgumentError("half_mix: alpha must lie in (0, 1)");

  const int h = input.height(), w = input.width(), ch = input.channels();
  const int kept = kept_extent(spec, h, w);
  const int extent = spec.orientation == Orientation::Vertical ? w : h;
  const int lo = spec.kept_side == KeptSide::First ? 0 : extent - kept;
  const int hi = lo + kept;
  const float a = static_cast<float>(spec.alpha);

  AugmentedSample out;
  out.image = reference;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int pos = spec.orientation == Orientation::Vertical ? x : y;
      if (pos < lo || pos >= hi) continue;
      for (int c = 0; c < ch; ++c) {
        float& dst = out.image.at(y, x, c);
        dst = mode == MaskMode::Binary ? input.at(y, x, c) : a * input.at(y, x, c) + (1.0f - a) * dst;
      }
    }
  }
  for (int k = 0; k < kNumClasses; ++k)
    out.label[k] = spec.alpha * input_label[k] + (1.0 - spec.alpha) * reference_label[k];
  out.provenance = {std::move(input_id), std::move(reference_id), spec};
  return out;
}

std::optional<std::size_t> select_reference(std::span<const Expression> batch_classes,
                                            const std::set<Expression>& minority, Rng& rng) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < batch_classes.size(); ++i)
    if (minority.contains(batch_classes[i])) candidates.push_back(i);
  if (candidates.empty()) return std::nullopt;
  return candidates[rng.below(candidates.size())];
}

HalfMixSpec sample_spec(Rng& rng) {
  HalfMixSpec spec;
  spec.orientation = rng.below(2) == 0 ? Orientation::Vertical : Orientation::Horizontal;
  spec.kept_side = rng.below(2) == 0 ? KeptSide::First : KeptSide::Second;
  spec.alpha = rng.below(2) == 0 ? 0.4 : 0.6;
  return spec;
}

Image horizontal_flip(const Image& image) {
  Image out(image.height(), image.width(), image.channels());
  const int w = image.width();
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < image.channels(); ++c) out.at(y, w - 1 - x, c) = image.at(y, x, c);
  return out;
}

Image crop(const Image& image, int top, int left, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0 || top < 0 || left < 0 || top + out_h > image.height() ||
      left + out_w > image.width())
    throw ArgumentError("crop region outside the image");
  Image out(out_h, out_w, image.channels());
  const std::size_t row = static_cast<std::size_t>(out_w) * image.channels();
  for (int y = 0; y < out_h; ++y)
    std::copy_n(&image.at(top + y, left, 0), row, &out.at(y, 0, 0));
  return out;
}

Image random_crop(const Image& image, int out_h, int out_w, Rng& rng) {
  if (out_h > image.height() || out_w > image.width())
    throw ArgumentError("random_crop: output larger than input");
  if (out_h <= 0 || out_w <= 0) throw ArgumentError("random_crop: output dims must be positive");
  const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(image.height() - out_h + 1)));
  const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(image.width() - out_w + 1)));
  return crop(image, top, left, out_h, out_w);
}

namespace {

struct Tap {
  int i0;
  int i1;
  float w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[i] = {i0, i1, static_cast<float>(src - i0)};
  }
  return taps;
}

}  // namespace

Image resize_bilinear(const Image& image, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_bilinear: output dims must be >= 1");
  if (out_h == image.height() && out_w == image.width()) return image;
  const int ch = image.channels();
  const auto ys = bilinear_taps(image.height(), out_h);
  const auto xs = bilinear_taps(image.width(), out_w);

  // Horizontal pass into a temporary of in_h x out_w, then vertical.
  Image tmp(image.height(), out_w, ch);
  for (int y = 0; y < image.height(); ++y) {
    const float* src = &image.at(y, 0, 0);
    float* dst = &tmp.at(y, 0, 0);
    for (int x = 0; x < out_w; ++x) {
      const Tap t = xs[x];
      for (int c = 0; c < ch; ++c)
        dst[x * ch + c] = (1.0f - t.w1) * src[t.i0 * ch + c] + t.w1 * src[t.i1 * ch + c];
    }
  }
  Image out(out_h, out_w, ch);
  const std::size_t row = static_cast<std::size_t>(out_w) * ch;
  for (int y = 0; y < out_h; ++y) {
    const Tap t = ys[y];
    const float* a = &tmp.at(t.i0, 0, 0);
    const float* b = &tmp.at(t.i1, 0, 0);
    float* dst = &out.at(y, 0, 0);
    for (std::size_t k = 0; k < row; ++k) dst[k] = std::clamp((1.0f - t.w1) * a[k] + t.w1 * b[k], 0.0f, 1.0f);
  }
  return out;
}

JitterDraw sample_jitter(const JitterConfig& config, Rng& rng) {
  JitterDraw draw;
  if (rng.bernoulli(config.probability)) draw.brightness = rng.uniform(-config.brightness, config.brightness);
  if (rng.bernoulli(config.probability))
    draw.contrast = std::exp(rng.uniform(std::log(config.contrast_min), std::log(config.contrast_max)));
  return draw;
}

void apply_jitter(Image& image, const JitterDraw& draw) {
  if (!draw.brightness && !draw.contrast) return;
  auto& v = image.values();
  if (draw.brightness) {
    const float delta = static_cast<float>(*draw.brightness);
    for (auto& x : v) x = std::clamp(x + delta, 0.0f, 1.0f);
  }
  if (draw.contrast) {
    const float mean = static_cast<float>(image.mean());
    const float factor = static_cast<float>(*draw.contrast);
    for (auto& x : v) x = std::clamp((x - mean) * factor + mean, 0.0f, 1.0f);
  }
}

}  // namespace fer
