#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>

#include "fer/expression.hpp"
#include "fer/image.hpp"
#include "fer/rng.hpp"

namespace fer {

using SoftLabel = ScoreRow;

SoftLabel one_hot(Expression e);
// Throws ArgumentError unless every entry is >= 0 and the sum is 1 within 1e-9.
void validate_soft_label(const SoftLabel& label);

enum class Orientation { Vertical, Horizontal };
enum class KeptSide { First, Second };  // left/top vs right/bottom

// Binary is the default. Soft blends the kept region at weight alpha instead
// of copying it.
enum class MaskMode { Binary, Soft };

struct HalfMixSpec {
  Orientation orientation = Orientation::Vertical;
  KeptSide kept_side = KeptSide::First;
  double alpha = 0.6;
};

std::string_view orientation_name(Orientation o);
std::string_view side_name(KeptSide s);

struct Provenance {
  std::string input_id;
  std::string reference_id;
  HalfMixSpec spec;
};

struct AugmentedSample {
  Image image;
  SoftLabel label{};
  Provenance provenance;
};

// Number of rows (horizontal) or columns (vertical) taken from the input.
int kept_extent(const HalfMixSpec& spec, int height, int width);

// Copies a contiguous block of floor(alpha * extent) columns or rows from the
// input and fills the remainder from the reference. Labels mix with alpha.
AugmentedSample half_mix(const Image& input, const SoftLabel& input_label, const Image& reference,
                         const SoftLabel& reference_label, const HalfMixSpec& spec,
                         MaskMode mode = MaskMode::Binary, std::string input_id = {},
                         std::string reference_id = {});

inline const std::set<Expression>& default_minority_classes() {
  static const std::set<Expression> classes = {Expression::Anger, Expression::Disgust,
                                               Expression::Fear, Expression::Surprise};
  return classes;
}

// Uniformly picks a batch position whose class is in the minority set.
std::optional<std::size_t> select_reference(std::span<const Expression> batch_classes,
                                            const std::set<Expression>& minority, Rng& rng);

HalfMixSpec sample_spec(Rng& rng);

Image horizontal_flip(const Image& image);
Image random_crop(const Image& image, int out_h, int out_w, Rng& rng);
Image crop(const Image& image, int top, int left, int out_h, int out_w);
// Half-pixel centers: output pixel i samples the input at (i + 0.5) * in / out - 0.5.
Image resize_bilinear(const Image& image, int out_h, int out_w);

// Fixed photometric jitter used in place of a searched augmentation policy.
struct JitterConfig {
  double brightness = 0.2;
  double contrast_min = 0.8;
  double contrast_max = 1.25;
  double probability = 0.5;
};

struct JitterDraw {
  std::optional<double> brightness;
  std::optional<double> contrast;
};

JitterDraw sample_jitter(const JitterConfig& config, Rng& rng);
void apply_jitter(Image& image, const JitterDraw& draw);

}  // namespace fer
