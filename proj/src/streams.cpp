#include "fer/streams.hpp"

#include "fer/error.hpp"
#include "fer/wav.hpp"

namespace fer {

const Image& ImageCache::get(const std::string& path) {
  auto it = images_.find(path);
  if (it == images_.end()) it = images_.emplace(path, read_image(path)).first;
  return it->second;
}

std::vector<SpectrogramGrid> audio_window_spectrograms(const VideoRecord& video, const SamplingPlan& plan,
                                                       const MelConfig& mel) {
  if (!video.audio_path) throw StreamUnavailableError("video " + video.video_id + " has no audio");
  const AudioClip full = resample_linear(read_wav(*video.audio_path), mel.sample_rate);
  std::vector<SpectrogramGrid> grids;
  grids.reserve(plan.windows.size());
  for (std::size_t k = 0; k < plan.windows.size(); ++k) {
    const auto [begin, end] = window_seconds(plan.windows[k], video.fps);
    SpectrogramGrid grid = mel_spectrogram(extract_window(full, begin, end - begin), mel);
    grid.video_id = video.video_id;
    grid.window_index = static_cast<int>(k);
    grids.push_back(std::move(grid));
  }
  return grids;
}

WindowSource::WindowSource(const DatasetManifest& manifest, Stream stream, Options options,
                           std::shared_ptr<ImageCache> cache)
    : stream_(stream), cache_(cache ? std::move(cache) : std::make_shared<ImageCache>()) {
  options.mel.validate(options.mel.sample_rate);
  for (const auto& video : manifest.videos) {
    if (stream == Stream::Audio && !video.audio_path) {
      if (options.skip_missing_audio) continue;
      throw StreamUnavailableError("video " + video.video_id + " has no audio");
    }
    SamplingPlan plan = sample_stream(stream, video);

    std::vector<Image> rendered;
    if (stream == Stream::Audio) {
      const AudioClip full = resample_linear(read_wav(*video.audio_path), options.mel.sample_rate);
      std::vector<SamplingWindow> kept;
      for (auto& w : plan.windows) {
        const auto [begin, end] = window_seconds(w, video.fps);
        AudioClip clip;
        try {
          clip = extract_window(full, begin, end - begin);
        } catch (const WindowRangeError&) {
          continue;  // audio track shorter than the frame timeline
        }
        SpectrogramGrid grid = mel_spectrogram(clip, options.mel);
        rendered.push_back(spectrogram_to_image(grid, options.spectrogram_size, options.spectrogram_size));
        kept.push_back(std::move(w));
      }
      plan.windows = std::move(kept);
    }

    for (std::size_t k = 0; k < plan.windows.size(); ++k) {
      auto& w = plan.windows[k];
      const Expression label = stream == Stream::Visual
                                   ? video.find_frame(w.start_frame)->label
                                   : window_label(video, w);
      if (options.labeled_only && !is_labeled(label)) continue;
      if (stream == Stream::Audio) {
        spectrograms_.push_back(std::move(rendered[k]));
      } else {
        std::vector<std::string> paths;
        for (auto idx : w.selected) {
          const auto* f = video.find_frame(idx);
          if (!f)
            throw IntegrityError("video " + video.video_id + " has no frame " + std::to_string(idx) +
                                 " needed by a " + std::string(stream_name(stream)) + " window");
          paths.push_back(f->image_path);
        }
        paths_.push_back(std::move(paths));
      }
      labels_.push_back(label);
      windows_.push_back(std::move(w));
    }
  }
}

std::string WindowSource::id(std::size_t i) const {
  const auto& w = windows_.at(i);
  return w.video_id + ":" + std::to_string(w.start_frame) + "-" + std::to_string(w.end_frame);
}

std::vector<Image> WindowSource::frames(std::size_t i) const {
  if (stream_ == Stream::Audio) return {spectrograms_.at(i)};
  std::vector<Image> out;
  for (const auto& p : paths_.at(i)) out.push_back(cache_->get(p));
  return out;
}

StreamScores predict(const BackboneSpec& backbone, const LinearHead& head, const WindowSource& windows,
                     const Augmenter& augmenter) {
  StreamScores scores;
  scores.stream = windows.stream();
  scores.rows.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows.window(i);
    const auto frames = augmenter.prepare_eval(windows, i);
    scores.rows.push_back({w.video_id, w.start_frame, w.end_frame, softmax(forward(backbone, head, frames))});
  }
  return scores;
}

StreamTrainOptions default_stream_options(Stream stream) {
  StreamTrainOptions options;
  options.train.stream = stream;
  options.train.halfmix_enabled = stream == Stream::Visual;
  options.augment = default_augment(stream);
  return options;
}

TrainHistory train_stream(const DatasetManifest& manifest, const StreamTrainOptions& options,
                          std::shared_ptr<ImageCache> cache) {
  const Stream stream = options.train.stream;
  const DatasetManifest* data = &manifest;
  DatasetManifest reduced;
  if (stream == Stream::Visual && options.subsample_fraction < 1.0) {
    reduced = subsample_per_class(manifest, options.subsample_fraction, options.train.seed);
    data = &reduced;
  }
  WindowSource::Options wopts;
  wopts.labeled_only = true;
  wopts.mel = options.mel;
  WindowSource source(*data, stream, wopts, std::move(cache));

  AugmentConfig augment = options.augment;
  augment.halfmix = augment.halfmix && options.train.halfmix_enabled && stream == Stream::Visual;
  const BackboneSpec backbone = backbone_for(stream);
  return train(source, options.train, Augmenter(augment, backbone), backbone);
}

StreamScores predict_stream(const DatasetManifest& manifest, Stream stream, const LinearHead& head,
                            const MelConfig& mel, std::shared_ptr<ImageCache> cache) {
  WindowSource::Options wopts;
  wopts.mel = mel;
  WindowSource source(manifest, stream, wopts, std::move(cache));
  const BackboneSpec backbone = backbone_for(stream);
  return predict(backbone, head, source, Augmenter(default_augment(stream), backbone));
}

}  // namespace fer
