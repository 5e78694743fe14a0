#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fer/dataset.hpp"
#include "fer/expression.hpp"

namespace fer {

struct ScoreWindow {
  std::string video_id;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // exclusive
  ScoreRow scores{};

  bool operator==(const ScoreWindow&) const = default;
};

struct StreamScores {
  Stream stream = Stream::Visual;
  std::vector<ScoreWindow> rows;
};

// Per-frame rows over a video's timeline; nullopt where the stream is absent.
using FrameRows = std::vector<std::optional<ScoreRow>>;

enum class FusionRule { ScoreMean, LogitMean, MajorityVote };

std::string_view fusion_rule_name(FusionRule rule);
FusionRule parse_fusion_rule(std::string_view name);

struct FusionConfig {
  std::array<double, 3> weights = {1.0, 1.0, 1.0};  // visual, temporal, audio
  FusionRule rule = FusionRule::ScoreMean;

  void validate() const;
};

// Broadcasts each window row to its frames. Rows of other videos are ignored.
FrameRows align_to_frames(const StreamScores& scores, const VideoRecord& video);

struct FusedFrames {
  FrameRows rows;
  std::int64_t unpredicted = 0;
};

// streams[s] is null when stream s was not provided at all. Weights of the
// streams present at a frame are renormalized.
FusedFrames fuse(const std::array<const FrameRows*, 3>& streams, const FusionConfig& config);

// Lowest class index wins ties.
Expression argmax_class(const ScoreRow& row);
std::vector<Expression> argmax_predict(std::span<const ScoreRow> rows);

struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};  // [true][predicted]

  std::int64_t total() const noexcept;
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const Expression> predictions, std::span<const Expression> labels);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Any 0/0 is taken as 0.
ClassScores f1_per_class(const ConfusionMatrix& cm, Expression cls);
double macro_f1(const ConfusionMatrix& cm);

struct MetricsReport {
  std::array<ClassScores, kNumClasses> per_class{};
  std::array<std::int64_t, kNumClasses> support{};
  double macro_f1 = 0.0;
  std::int64_t total_frames = 0;  // labeled frames that received a prediction
  std::int64_t unpredicted = 0;   // labeled frames with no stream coverage
  ConfusionMatrix confusion;
};

MetricsReport metrics_report(const ConfusionMatrix& cm, std::int64_t unpredicted = 0);

struct EvaluationRow {
  std::string name;  // "Visual", "Temporal", "Audio", "V+T", "V+T+A"
  MetricsReport report;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
  FusionConfig fusion;
};

// Single-stream rows for every provided stream, then V+T and V+T+A when their
// streams are provided.
EvaluationReport evaluate(const DatasetManifest& manifest, const std::map<Stream, StreamScores>& scores,
                          const FusionConfig& config);

// Per-frame fused rows for every video of the manifest, as score windows of
// length one. Unpredicted frames are omitted.
StreamScores fuse_manifest(const DatasetManifest& manifest, const std::map<Stream, StreamScores>& scores,
                           const FusionConfig& config, std::int64_t* unpredicted = nullptr);

// CSV with header video_id,start_frame,end_frame,neutral,...,other.
void write_scores_csv(std::ostream& out, const StreamScores& scores);
StreamScores read_scores_csv(std::istream& in, Stream stream);
void save_scores_csv(const std::filesystem::path& path, const StreamScores& scores);
StreamScores load_scores_csv(const std::filesystem::path& path, Stream stream);

void write_report_text(std::ostream& out, const EvaluationReport& report);
void write_report_kv(std::ostream& out, const EvaluationReport& report);

}  // namespace fer
