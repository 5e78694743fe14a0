#include "fer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "fer/error.hpp"
#include "fer/rng.hpp"

namespace fer {

void AugmentConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError(std::string(name) + " must lie in [0, 1]");
  };
  prob(flip_probability, "flip_probability");
  prob(halfmix_probability, "halfmix_probability");
  prob(jitter_config.probability, "jitter probability");
  if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) throw ArgumentError("crop_fraction must lie in (0, 1]");
  if (!(jitter_config.brightness >= 0.0)) throw ArgumentError("brightness must be >= 0");
  if (!(jitter_config.contrast_min > 0.0 && jitter_config.contrast_min <= jitter_config.contrast_max))
    throw ArgumentError("contrast range must satisfy 0 < min <= max");
}

AugmentConfig default_augment(Stream stream) {
  AugmentConfig config;
  config.halfmix = stream == Stream::Visual;
  config.random_crop = stream == Stream::Temporal;
  return config;
}

Augmenter::Augmenter(AugmentConfig config, BackboneSpec backbone)
    : config_(std::move(config)), backbone_(backbone) {
  config_.validate();
}

Image Augmenter::fit(const Image& image) const {
  return resize_bilinear(image, backbone_.input_size, backbone_.input_size);
}

std::vector<Image> Augmenter::prepare_eval(const ExampleSource& source, std::size_t i) const {
  auto frames = source.frames(i);
  for (auto& f : frames) f = fit(f);
  return frames;
}

std::vector<PreparedExample> Augmenter::prepare_batch(const ExampleSource& source,
                                                      std::span<const std::size_t> indices,
                                                      std::uint64_t batch_seed) const {
  const std::size_t n = indices.size();
  std::vector<Expression> classes(n);
  for (std::size_t j = 0; j < n; ++j) classes[j] = source.label(indices[j]);

  // Half-mix references are taken from the un-augmented batch members.
  std::vector<std::vector<Image>> base(n);
  const bool mixing = config_.halfmix && backbone_.frames_per_input() == 1;
  if (mixing)
    for (std::size_t j = 0; j < n; ++j) base[j] = prepare_eval(source, indices[j]);

  std::vector<PreparedExample> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    Rng rng(mix_seed(batch_seed, j));
    PreparedExample& ex = out[j];
    ex.input_label = one_hot(classes[j]);
    ex.label = ex.input_label;

    std::vector<Image> frames;
    if (config_.random_crop) {
      // One crop window shared by every frame of the example.
      frames = source.frames(indices[j]);
      const int h = frames.front().height(), w = frames.front().width();
      const int ch = std::max(1, static_cast<int>(std::floor(config_.crop_fraction * h)));
      const int cw = std::max(1, static_cast<int>(std::floor(config_.crop_fraction * w)));
      const int top = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - ch + 1)));
      const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - cw + 1)));
      for (auto& f : frames) f = fit(crop(f, top, left, ch, cw));
    } else {
      frames = mixing ? base[j] : prepare_eval(source, indices[j]);
    }

    if (rng.bernoulli(config_.flip_probability))
      for (auto& f : frames) f = horizontal_flip(f);

    if (mixing && rng.bernoulli(config_.halfmix_probability)) {
      if (auto ref = select_reference(classes, config_.minority, rng)) {
        const HalfMixSpec spec = sample_spec(rng);
        const SoftLabel ref_label = one_hot(classes[*ref]);
        auto mixed = half_mix(frames.front(), ex.input_label, base[*ref].front(), ref_label, spec, config_.mask,
                              source.id(indices[j]), source.id(indices[*ref]));
        frames.front() = std::move(mixed.image);
        ex.label = mixed.label;
        ex.reference_label = ref_label;
        ex.mix = std::move(mixed.provenance);
      }
    }

    if (config_.jitter) {
      const JitterDraw draw = sample_jitter(config_.jitter_config, rng);
      for (auto& f : frames) apply_jitter(f, draw);
    }
    ex.frames = std::move(frames);
  }
  return out;
}

TrainHistory train(const ExampleSource& source, const TrainConfig& config, const Augmenter& augmenter,
                   const BackboneSpec& backbone) {
  config.validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < source.size(); ++i)
    if (is_labeled(source.label(i))) usable.push_back(i);
  if (usable.empty())
    throw Error("no labeled training examples for the " + std::string(stream_name(source.stream())) + " stream");

  TrainHistory history;
  history.head = LinearHead::initialize(backbone.output_dim(), config.seed);
  std::vector<double> params = history.head.flatten();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad(params.size(), 0.0);

  const std::size_t n = usable.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_schedule(epoch, config);

    std::vector<std::size_t> order = usable;
    Rng shuffle(mix_seed(config.seed, 1, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    for (std::size_t b = 0, step = 0; b < n; b += batch, ++step) {
      const std::span<const std::size_t> idx(order.data() + b, std::min(batch, n - b));
      const auto prepared =
          augmenter.prepare_batch(source, idx, mix_seed(config.seed, 2, static_cast<std::uint64_t>(epoch), step));
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(idx.size());
      for (const auto& ex : prepared) {
        const auto feature = extract_features(backbone, ex.frames);
        loss_sum += head_loss_and_gradient(history.head, feature, ex.label, grad, scale);
      }
      sgd_momentum_step(params, grad, velocity, lr, config.momentum);
      history.head.assign(params);
      ++history.steps;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back({epoch, loss_sum / static_cast<double>(n), lr, seconds});
  }
  return history;
}

double accuracy(const ExampleSource& source, const Augmenter& augmenter, const BackboneSpec& backbone,
                const LinearHead& head) {
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!is_labeled(source.label(i))) continue;
    const auto frames = augmenter.prepare_eval(source, i);
    const auto logits = forward(backbone, head, frames);
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    correct += best == index_of(source.label(i));
    ++total;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

void write_training_log(std::ostream& out, const TrainHistory& history, const std::string& header) {
  out << "# " << header << '\n';
  char buf[128];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof buf, "epoch=%d mean_loss=%.17g lr=%.17g\n", e.epoch, e.mean_loss, e.lr);
    out << buf;
  }
}

}  // namespace fer
