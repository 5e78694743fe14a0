#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "fer/audio.hpp"
#include "fer/dataset.hpp"
#include "fer/fusion_eval.hpp"
#include "fer/model.hpp"
#include "fer/streams.hpp"
#include "fer/trainer.hpp"

namespace fer {

// Sectioned key=value configuration:
//
//   [dataset]  root split eval_split fps manifest
//   [mel]      sample_rate n_fft hop n_mels f_min f_max log_floor
//   [train]    epochs batch_size lr0 momentum milestones gamma halfmix subsample
//   [augment]  flip_probability halfmix_probability mask minority crop_fraction
//              jitter jitter_probability brightness contrast_min contrast_max
//   [fusion]   weights rule
//   [run]      seed
//
// '#' and ';' start comments. Unknown sections or keys are errors.
struct RunConfig {
  std::filesystem::path dataset_root;
  Split split = Split::Train;
  Split eval_split = Split::Validation;
  Rational fps{30, 1};
  std::optional<std::filesystem::path> manifest;

  MelConfig mel;
  TrainConfig train;
  double subsample = 0.1;
  AugmentConfig augment;
  bool augment_halfmix = true;
  bool augment_crop = true;
  FusionConfig fusion;
  std::uint64_t seed = 0;

  // Checks every section against its module's invariants.
  void validate() const;

  // Training options for one stream with the per-stream augmentation set.
  StreamTrainOptions stream_options(Stream stream) const;

  // "epochs=70 batch=32 lr0=0.001 momentum=0.9 milestones=40,50,60 gamma=0.1 seed=0"
  std::string describe_training() const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

// "section.key=value"
void apply_override(RunConfig& config, std::string_view assignment);
void set_value(RunConfig& config, std::string_view section, std::string_view key, std::string_view value);

}  // namespace fer
