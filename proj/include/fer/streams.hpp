#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fer/audio.hpp"
#include "fer/dataset.hpp"
#include "fer/fusion_eval.hpp"
#include "fer/trainer.hpp"

namespace fer {

// Memoizes decoded frame images by path. Not thread-safe.
class ImageCache {
 public:
  const Image& get(const std::string& path);
  std::size_t size() const noexcept { return images_.size(); }

 private:
  std::map<std::string, Image, std::less<>> images_;
};

// Sampling-plan windows of one stream over a manifest, with their frames.
// Visual: one example per frame. Temporal: one per 1 s shot (16 frames).
// Audio: one per 2 s window, rendered as a mel-spectrogram image.
class WindowSource final : public ExampleSource {
 public:
  struct Options {
    bool labeled_only = false;  // drop windows without a majority label
    bool skip_missing_audio = true;
    MelConfig mel;
    int spectrogram_size = 224;
  };

  WindowSource(const DatasetManifest& manifest, Stream stream, Options options,
               std::shared_ptr<ImageCache> cache = nullptr);

  Stream stream() const override { return stream_; }
  std::size_t size() const override { return windows_.size(); }
  Expression label(std::size_t i) const override { return labels_.at(i); }
  std::string id(std::size_t i) const override;
  std::vector<Image> frames(std::size_t i) const override;

  const SamplingWindow& window(std::size_t i) const { return windows_.at(i); }

 private:
  Stream stream_;
  std::vector<SamplingWindow> windows_;
  std::vector<Expression> labels_;
  std::vector<std::vector<std::string>> paths_;  // visual/temporal
  std::vector<Image> spectrograms_;              // audio
  std::shared_ptr<ImageCache> cache_;
};

// Loads the video's audio, resamples to the mel rate, and renders each window.
std::vector<SpectrogramGrid> audio_window_spectrograms(const VideoRecord& video, const SamplingPlan& plan,
                                                       const MelConfig& mel);

// One softmax row per window, tagged with the window's frame range.
StreamScores predict(const BackboneSpec& backbone, const LinearHead& head, const WindowSource& windows,
                     const Augmenter& augmenter);

struct StreamTrainOptions {
  TrainConfig train;
  AugmentConfig augment;
  MelConfig mel;
  double subsample_fraction = 1.0;  // per-class subsampling, visual stream only
};

StreamTrainOptions default_stream_options(Stream stream);

// Builds the stream's training windows from the manifest and trains a head.
TrainHistory train_stream(const DatasetManifest& manifest, const StreamTrainOptions& options,
                          std::shared_ptr<ImageCache> cache = nullptr);

StreamScores predict_stream(const DatasetManifest& manifest, Stream stream, const LinearHead& head,
                            const MelConfig& mel, std::shared_ptr<ImageCache> cache = nullptr);

}  // namespace fer
