#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fer/augment.hpp"
#include "fer/model.hpp"

namespace fer {

// Indexed collection of training or inference examples for one stream.
class ExampleSource {
 public:
  virtual ~ExampleSource() = default;
  virtual Stream stream() const = 0;
  virtual std::size_t size() const = 0;
  virtual Expression label(std::size_t i) const = 0;
  virtual std::string id(std::size_t i) const = 0;
  // Frames at their stored resolution: one for visual/audio, 16 for temporal.
  virtual std::vector<Image> frames(std::size_t i) const = 0;
};

class InMemorySource final : public ExampleSource {
 public:
  struct Example {
    std::string id;
    Expression label = Expression::Unlabeled;
    std::vector<Image> frames;
  };

  InMemorySource(Stream stream, std::vector<Example> examples)
      : stream_(stream), examples_(std::move(examples)) {}

  Stream stream() const override { return stream_; }
  std::size_t size() const override { return examples_.size(); }
  Expression label(std::size_t i) const override { return examples_.at(i).label; }
  std::string id(std::size_t i) const override { return examples_.at(i).id; }
  std::vector<Image> frames(std::size_t i) const override { return examples_.at(i).frames; }

 private:
  Stream stream_;
  std::vector<Example> examples_;
};

struct AugmentConfig {
  double flip_probability = 0.5;
  bool halfmix = false;
  double halfmix_probability = 0.5;
  MaskMode mask = MaskMode::Binary;
  std::set<Expression> minority = default_minority_classes();
  bool random_crop = false;
  double crop_fraction = 0.875;  // of the stored frame size, before resizing
  bool jitter = true;
  JitterConfig jitter_config;

  void validate() const;
};

// visual: flip + half-mix + jitter; temporal: flip + random crop + jitter;
// audio: flip + jitter.
AugmentConfig default_augment(Stream stream);

struct PreparedExample {
  std::vector<Image> frames;  // backbone-ready
  SoftLabel label{};
  SoftLabel input_label{};
  std::optional<SoftLabel> reference_label;
  std::optional<Provenance> mix;
};

class Augmenter {
 public:
  Augmenter(AugmentConfig config, BackboneSpec backbone);

  const AugmentConfig& config() const noexcept { return config_; }

  // Every example draws from its own generator mix_seed(batch_seed, position),
  // so results do not depend on evaluation order.
  std::vector<PreparedExample> prepare_batch(const ExampleSource& source, std::span<const std::size_t> indices,
                                             std::uint64_t batch_seed) const;

  // Inference path: resize only.
  std::vector<Image> prepare_eval(const ExampleSource& source, std::size_t i) const;

 private:
  Image fit(const Image& image) const;

  AugmentConfig config_;
  BackboneSpec backbone_;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  LinearHead head;
  std::size_t steps = 0;
};

// Examples with an unlabeled class are skipped.
TrainHistory train(const ExampleSource& source, const TrainConfig& config, const Augmenter& augmenter,
                   const BackboneSpec& backbone);

double accuracy(const ExampleSource& source, const Augmenter& augmenter, const BackboneSpec& backbone,
                const LinearHead& head);

// Line-delimited "epoch=E mean_loss=L lr=R" records after a '#' header line.
void write_training_log(std::ostream& out, const TrainHistory& history, const std::string& header);

}  // namespace fer
