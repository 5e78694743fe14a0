#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fer/augment.hpp"
#include "fer/expression.hpp"
#include "fer/image.hpp"

namespace fer {

using FeatureVector = std::vector<double>;

enum class BackboneKind {
  FlattenMean,      // per-channel patch means on a grid x grid layout
  TemporalMean,     // mean of the per-frame FlattenMean features of a shot
  SpectrogramMean,  // FlattenMean applied to a mel-spectrogram image
};

// Fixed, untrained feature extractor standing in for a large image backbone.
struct BackboneSpec {
  BackboneKind kind = BackboneKind::FlattenMean;
  int grid = 8;
  int input_size = 224;

  int output_dim() const noexcept { return grid * grid * 3; }
  int frames_per_input() const noexcept { return kind == BackboneKind::TemporalMean ? 16 : 1; }
};

BackboneSpec backbone_for(Stream stream);

// Feature layout: ((row * grid) + col) * 3 + channel.
FeatureVector patch_mean_features(const Image& image, int grid);

// Checks the input shape against the backbone and extracts its feature.
FeatureVector extract_features(const BackboneSpec& backbone, std::span<const Image> frames);

struct LinearHead {
  int dim = 0;
  std::vector<double> weights;  // kNumClasses x dim, row-major
  std::vector<double> bias;     // kNumClasses

  static LinearHead zeros(int dim);
  // Uniform(-0.01, 0.01) from the seed.
  static LinearHead initialize(int dim, std::uint64_t seed);

  std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }
  // Parameters as one flat vector: weights then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const LinearHead&) const = default;
};

ScoreRow head_logits(const LinearHead& head, std::span<const double> feature);

ScoreRow softmax(const ScoreRow& logits);

// -sum_c target_c * log softmax(logits)_c with max subtraction.
double soft_cross_entropy(const ScoreRow& logits, const SoftLabel& target);
// softmax(logits) - target.
ScoreRow grad_soft_cross_entropy(const ScoreRow& logits, const SoftLabel& target);

// Loss of one example and its gradient with respect to the head parameters
// (flat layout of LinearHead::flatten), accumulated into grad with weight scale.
double head_loss_and_gradient(const LinearHead& head, std::span<const double> feature,
                              const SoftLabel& target, std::span<double> grad, double scale = 1.0);

ScoreRow forward(const BackboneSpec& backbone, const LinearHead& head, std::span<const Image> frames);

struct TrainConfig {
  int epochs = 70;
  int batch_size = 32;
  double lr0 = 1e-3;
  double momentum = 0.9;
  std::vector<int> milestones = {40, 50, 60};
  double gamma = 0.1;
  std::uint64_t seed = 0;
  Stream stream = Stream::Visual;
  bool halfmix_enabled = true;  // visual stream only

  void validate() const;
};

double lr_schedule(int epoch, const TrainConfig& config);

// Heavy-ball update: v <- momentum * v + g; p <- p - lr * v.
void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum);

// Little-endian "FERH", u32 D, 8*D f32 weights, 8 f32 biases.
void write_checkpoint(std::ostream& out, const LinearHead& head);
LinearHead read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const LinearHead& head);
LinearHead load_checkpoint(const std::filesystem::path& path);

}  // namespace fer
