#include "fer/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "fer/error.hpp"
#include "fer/rng.hpp"

namespace fer {

BackboneSpec backbone_for(Stream stream) {
  BackboneSpec spec;
  switch (stream) {
    case Stream::Visual: spec.kind = BackboneKind::FlattenMean; break;
    case Stream::Temporal: spec.kind = BackboneKind::TemporalMean; break;
    case Stream::Audio: spec.kind = BackboneKind::SpectrogramMean; break;
  }
  return spec;
}

FeatureVector patch_mean_features(const Image& image, int grid) {
  if (image.channels() != 3) throw ArgumentError("backbone expects 3-channel images");
  if (image.height() < grid || image.width() < grid) throw ArgumentError("image smaller than the patch grid");
  FeatureVector feature(static_cast<std::size_t>(grid) * grid * 3, 0.0);
  for (int gy = 0; gy < grid; ++gy) {
    const int y0 = gy * image.height() / grid, y1 = (gy + 1) * image.height() / grid;
    for (int gx = 0; gx < grid; ++gx) {
      const int x0 = gx * image.width() / grid, x1 = (gx + 1) * image.width() / grid;
      double sum[3] = {0.0, 0.0, 0.0};
      for (int y = y0; y < y1; ++y) {
        const float* row = &image.at(y, x0, 0);
        for (int x = 0; x < x1 - x0; ++x) {
          sum[0] += row[3 * x];
          sum[1] += row[3 * x + 1];
          sum[2] += row[3 * x + 2];
        }
      }
      const double count = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int c = 0; c < 3; ++c) feature[(static_cast<std::size_t>(gy) * grid + gx) * 3 + c] = sum[c] / count;
    }
  }
  return feature;
}

FeatureVector extract_features(const BackboneSpec& backbone, std::span<const Image> frames) {
  if (static_cast<int>(frames.size()) != backbone.frames_per_input())
    throw ArgumentError("backbone expects " + std::to_string(backbone.frames_per_input()) + " frame(s), got " +
                        std::to_string(frames.size()));
  for (const auto& f : frames)
    if (f.height() != backbone.input_size || f.width() != backbone.input_size || f.channels() != 3)
      throw ArgumentError("backbone expects " + std::to_string(backbone.input_size) + "x" +
                          std::to_string(backbone.input_size) + "x3 input, got " + std::to_string(f.height()) +
                          "x" + std::to_string(f.width()) + "x" + std::to_string(f.channels()));
  if (frames.size() == 1) return patch_mean_features(frames[0], backbone.grid);
  FeatureVector mean(static_cast<std::size_t>(backbone.output_dim()), 0.0);
  for (const auto& f : frames) {
    const auto feat = patch_mean_features(f, backbone.grid);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += feat[i];
  }
  for (auto& v : mean) v /= static_cast<double>(frames.size());
  return mean;
}

LinearHead LinearHead::zeros(int dim) {
  if (dim <= 0) throw ArgumentError("head dimension must be positive");
  LinearHead head;
  head.dim = dim;
  head.weights.assign(static_cast<std::size_t>(kNumClasses) * dim, 0.0);
  head.bias.assign(kNumClasses, 0.0);
  return head;
}

LinearHead LinearHead::initialize(int dim, std::uint64_t seed) {
  LinearHead head = zeros(dim);
  Rng rng(mix_seed(seed, 0x4845414455ULL));
  for (auto& w : head.weights) w = rng.uniform(-0.01, 0.01);
  for (auto& b : head.bias) b = rng.uniform(-0.01, 0.01);
  return head;
}

std::vector<double> LinearHead::flatten() const {
  std::vector<double> flat(weights);
  flat.insert(flat.end(), bias.begin(), bias.end());
  return flat;
}

void LinearHead::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ArgumentError("parameter vector has the wrong length");
  std::copy_n(flat.begin(), weights.size(), weights.begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(weights.size()), flat.end(), bias.begin());
}

ScoreRow head_logits(const LinearHead& head, std::span<const double> feature) {
  if (static_cast<int>(feature.size()) != head.dim)
    throw ArgumentError("feature dimension " + std::to_string(feature.size()) + " does not match head dimension " +
                        std::to_string(head.dim));
  ScoreRow logits{};
  for (int c = 0; c < kNumClasses; ++c) {
    const double* w = head.weights.data() + static_cast<std::size_t>(c) * head.dim;
    double z = head.bias[c];
    for (int i = 0; i < head.dim; ++i) z += w[i] * feature[i];
    logits[c] = z;
  }
  return logits;
}

namespace {

void check_finite(const ScoreRow& logits) {
  for (double z : logits)
    if (!std::isfinite(z)) throw NumericError("non-finite logit");
}

// log-sum-exp with max subtraction.
double log_normalizer(const ScoreRow& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  return m + std::log(s);
}

}  // namespace

ScoreRow softmax(const ScoreRow& logits) {
  check_finite(logits);
  const double m = *std::max_element(logits.begin(), logits.end());
  ScoreRow p{};
  double s = 0.0;
  for (int c = 0; c < kNumClasses; ++c) s += (p[c] = std::exp(logits[c] - m));
  for (auto& v : p) v /= s;
  return p;
}

double soft_cross_entropy(const ScoreRow& logits, const SoftLabel& target) {
  check_finite(logits);
  validate_soft_label(target);
  const double lse = log_normalizer(logits);
  double loss = 0.0;
  for (int c = 0; c < kNumClasses; ++c)
    if (target[c] != 0.0) loss -= target[c] * (logits[c] - lse);
  return std::max(loss, 0.0);
}

ScoreRow grad_soft_cross_entropy(const ScoreRow& logits, const SoftLabel& target) {
  validate_soft_label(target);
  ScoreRow g = softmax(logits);
  for (int c = 0; c < kNumClasses; ++c) g[c] -= target[c];
  return g;
}

double head_loss_and_gradient(const LinearHead& head, std::span<const double> feature, const SoftLabel& target,
                              std::span<double> grad, double scale) {
  if (grad.size() != head.parameter_count()) throw ArgumentError("gradient buffer has the wrong length");
  const ScoreRow logits = head_logits(head, feature);
  const ScoreRow dz = grad_soft_cross_entropy(logits, target);
  const std::size_t bias_offset = head.weights.size();
  for (int c = 0; c < kNumClasses; ++c) {
    const double g = scale * dz[c];
    double* row = grad.data() + static_cast<std::size_t>(c) * head.dim;
    for (int i = 0; i < head.dim; ++i) row[i] += g * feature[i];
    grad[bias_offset + c] += g;
  }
  return soft_cross_entropy(logits, target);
}

ScoreRow forward(const BackboneSpec& backbone, const LinearHead& head, std::span<const Image> frames) {
  const auto feature = extract_features(backbone, frames);
  return head_logits(head, feature);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ArgumentError("lr0 must be a finite non-negative number");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ArgumentError("gamma must lie in (0, 1)");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (milestones[i] < 0 || milestones[i] >= epochs)
      throw ArgumentError("milestones must lie in [0, epochs)");
    if (i > 0 && milestones[i] <= milestones[i - 1]) throw ArgumentError("milestones must be strictly increasing");
  }
}

double lr_schedule(int epoch, const TrainConfig& config) {
  if (epoch < 0 || epoch >= config.epochs)
    throw ArgumentError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(config.epochs) + ")");
  const auto passed = std::count_if(config.milestones.begin(), config.milestones.end(),
                                    [epoch](int m) { return m <= epoch; });
  // Dividing by (1/gamma)^k keeps decimal rates exact: 1e-3 * 0.1^2 would give
  // 1.0000000000000003e-05, while 1e-3 / 10^2 gives 1e-05.
  return config.lr0 / std::pow(1.0 / config.gamma, static_cast<double>(passed));
}

void sgd_momentum_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
                       double lr, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw ArgumentError("sgd_momentum_step: length mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= lr * velocity[i];
  }
}

void write_checkpoint(std::ostream& out, const LinearHead& head) {
  out.write("FERH", 4);
  detail::put_u32(out, static_cast<std::uint32_t>(head.dim));
  for (double w : head.weights) detail::put_f32(out, static_cast<float>(w));
  for (double b : head.bias) detail::put_f32(out, static_cast<float>(b));
}

LinearHead read_checkpoint(std::istream& in) {
  detail::expect_magic(in, "FERH");
  const auto dim = detail::get_u32(in);
  if (dim == 0 || dim > (1u << 24)) throw IoError("bad checkpoint dimension");
  LinearHead head = LinearHead::zeros(static_cast<int>(dim));
  for (auto& w : head.weights) w = detail::get_f32(in);
  for (auto& b : head.bias) b = detail::get_f32(in);
  return head;
}

void save_checkpoint(const std::filesystem::path& path, const LinearHead& head) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, head);
}

LinearHead load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace fer
