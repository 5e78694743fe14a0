#include "fer/fusion_eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "fer/error.hpp"

namespace fer {

std::string_view fusion_rule_name(FusionRule rule) {
  switch (rule) {
    case FusionRule::ScoreMean: return "score_mean";
    case FusionRule::LogitMean: return "logit_mean";
    case FusionRule::MajorityVote: return "majority_vote";
  }
  return "?";
}

FusionRule parse_fusion_rule(std::string_view name) {
  if (name == "score_mean") return FusionRule::ScoreMean;
  if (name == "logit_mean") return FusionRule::LogitMean;
  if (name == "majority_vote") return FusionRule::MajorityVote;
  throw ArgumentError("unknown fusion rule '" + std::string(name) + "'");
}

void FusionConfig::validate() const {
  bool positive = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("fusion weights must be finite and non-negative");
    positive = positive || w > 0.0;
  }
  if (!positive) throw ArgumentError("at least one fusion weight must be positive");
}

namespace {

void check_row(const ScoreRow& row, const std::string& where) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw IntegrityError(where + ": scores must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw IntegrityError(where + ": scores must sum to 1");
}

}  // namespace

FrameRows align_to_frames(const StreamScores& scores, const VideoRecord& video) {
  const auto n = video.timeline_length();
  FrameRows rows(static_cast<std::size_t>(n));
  for (const auto& w : scores.rows) {
    if (w.video_id != video.video_id) continue;
    const std::string where = std::string(stream_name(scores.stream)) + " window [" + std::to_string(w.start_frame) +
                              "," + std::to_string(w.end_frame) + ") of " + w.video_id;
    if (w.start_frame < 0 || w.end_frame <= w.start_frame || w.end_frame > n)
      throw IntegrityError(where + " lies outside the video timeline of " + std::to_string(n) + " frames");
    check_row(w.scores, where);
    for (auto f = w.start_frame; f < w.end_frame; ++f) {
      auto& slot = rows[static_cast<std::size_t>(f)];
      if (slot) throw IntegrityError(where + " overlaps another window at frame " + std::to_string(f));
      slot = w.scores;
    }
  }
  return rows;
}

FusedFrames fuse(const std::array<const FrameRows*, 3>& streams, const FusionConfig& config) {
  config.validate();
  std::size_t frames = 0;
  for (const auto* s : streams)
    if (s) frames = std::max(frames, s->size());

  FusedFrames out;
  out.rows.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    ScoreRow acc{};
    double weight_sum = 0.0;
    for (std::size_t s = 0; s < streams.size(); ++s) {
      if (!streams[s] || f >= streams[s]->size() || !(*streams[s])[f]) continue;
      const double w = config.weights[s];
      if (w == 0.0) continue;
      const ScoreRow& row = *(*streams[s])[f];
      switch (config.rule) {
        case FusionRule::ScoreMean:
          for (int c = 0; c < kNumClasses; ++c) acc[c] += w * row[c];
          break;
        case FusionRule::LogitMean:
          for (int c = 0; c < kNumClasses; ++c) acc[c] += w * std::log(std::max(row[c], 1e-300));
          break;
        case FusionRule::MajorityVote:
          acc[index_of(argmax_class(row))] += w;
          break;
      }
      weight_sum += w;
    }
    if (weight_sum == 0.0) {
      ++out.unpredicted;
      continue;
    }
    ScoreRow fused{};
    if (config.rule == FusionRule::LogitMean) {
      const double m = *std::max_element(acc.begin(), acc.end()) / weight_sum;
      double z = 0.0;
      for (int c = 0; c < kNumClasses; ++c) z += (fused[c] = std::exp(acc[c] / weight_sum - m));
      for (auto& v : fused) v /= z;
    } else {
      for (int c = 0; c < kNumClasses; ++c) fused[c] = acc[c] / weight_sum;
    }
    out.rows[f] = fused;
  }
  return out;
}

Expression argmax_class(const ScoreRow& row) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (row[c] > row[best]) best = c;
  return static_cast<Expression>(best);
}

std::vector<Expression> argmax_predict(std::span<const ScoreRow> rows) {
  std::vector<Expression> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(argmax_class(r));
  return out;
}

std::int64_t ConfusionMatrix::total() const noexcept {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

ConfusionMatrix confusion(std::span<const Expression> predictions, std::span<const Expression> labels) {
  if (predictions.size() != labels.size()) throw ArgumentError("confusion: length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!is_labeled(labels[i]) || !is_labeled(predictions[i]))
      throw ArgumentError("confusion: unlabeled entries must be removed before scoring");
    ++cm.counts[index_of(labels[i])][index_of(predictions[i])];
  }
  return cm;
}

ClassScores f1_per_class(const ConfusionMatrix& cm, Expression cls) {
  const int k = index_of(cls);
  if (!is_labeled(cls)) throw ArgumentError("f1_per_class needs a valid class");
  const std::int64_t tp = cm.counts[k][k];
  std::int64_t fp = 0, fn = 0;
  for (int j = 0; j < kNumClasses; ++j) {
    if (j == k) continue;
    fp += cm.counts[j][k];
    fn += cm.counts[k][j];
  }
  auto ratio = [](std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  ClassScores s;
  s.precision = ratio(tp, tp + fp);
  s.recall = ratio(tp, tp + fn);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double macro_f1(const ConfusionMatrix& cm) {
  double sum = 0.0;
  for (auto c : kAllClasses) sum += f1_per_class(cm, c).f1;
  return sum / kNumClasses;
}

MetricsReport metrics_report(const ConfusionMatrix& cm, std::int64_t unpredicted) {
  MetricsReport r;
  r.confusion = cm;
  for (int k = 0; k < kNumClasses; ++k) {
    r.per_class[k] = f1_per_class(cm, static_cast<Expression>(k));
    for (int j = 0; j < kNumClasses; ++j) r.support[k] += cm.counts[k][j];
  }
  r.macro_f1 = macro_f1(cm);
  r.total_frames = cm.total();
  r.unpredicted = unpredicted;
  return r;
}

namespace {

void check_known_videos(const DatasetManifest& manifest, const StreamScores& scores) {
  for (std::size_t i = 0; i < scores.rows.size(); ++i)
    if (!manifest.find_video(scores.rows[i].video_id))
      throw IntegrityError(std::string(stream_name(scores.stream)) + " score row " + std::to_string(i + 1) +
                           " references unknown video '" + scores.rows[i].video_id + "'");
}

MetricsReport evaluate_combination(const DatasetManifest& manifest, const std::map<Stream, StreamScores>& scores,
                                   const std::set<Stream>& use, const FusionConfig& config) {
  ConfusionMatrix cm;
  std::int64_t unpredicted = 0;
  for (const auto& video : manifest.videos) {
    std::array<FrameRows, 3> aligned;
    std::array<const FrameRows*, 3> ptrs{nullptr, nullptr, nullptr};
    for (Stream s : use) {
      const int i = static_cast<int>(s);
      aligned[i] = align_to_frames(scores.at(s), video);
      ptrs[i] = &aligned[i];
    }
    const FusedFrames fused = fuse(ptrs, config);
    for (const auto& frame : video.frames) {
      if (!is_labeled(frame.label)) continue;
      const auto pos = static_cast<std::size_t>(frame.frame_index);
      if (pos >= fused.rows.size() || !fused.rows[pos]) {
        ++unpredicted;
        continue;
      }
      ++cm.counts[index_of(frame.label)][index_of(argmax_class(*fused.rows[pos]))];
    }
  }
  return metrics_report(cm, unpredicted);
}

}  // namespace

EvaluationReport evaluate(const DatasetManifest& manifest, const std::map<Stream, StreamScores>& scores,
                          const FusionConfig& config) {
  config.validate();
  for (const auto& [stream, s] : scores) check_known_videos(manifest, s);

  EvaluationReport report;
  report.fusion = config;
  FusionConfig single;
  single.rule = config.rule;
  single.weights = {1.0, 1.0, 1.0};
  const std::pair<Stream, const char*> singles[] = {
      {Stream::Visual, "Visual"}, {Stream::Temporal, "Temporal"}, {Stream::Audio, "Audio"}};
  for (const auto& [stream, name] : singles)
    if (scores.contains(stream)) report.rows.push_back({name, evaluate_combination(manifest, scores, {stream}, single)});

  const bool v = scores.contains(Stream::Visual), t = scores.contains(Stream::Temporal),
             a = scores.contains(Stream::Audio);
  if (v && t)
    report.rows.push_back(
        {"V+T", evaluate_combination(manifest, scores, {Stream::Visual, Stream::Temporal}, config)});
  if (v && t && a)
    report.rows.push_back(
        {"V+T+A", evaluate_combination(manifest, scores, {Stream::Visual, Stream::Temporal, Stream::Audio}, config)});
  return report;
}

StreamScores fuse_manifest(const DatasetManifest& manifest, const std::map<Stream, StreamScores>& scores,
                           const FusionConfig& config, std::int64_t* unpredicted) {
  config.validate();
  for (const auto& [stream, s] : scores) check_known_videos(manifest, s);
  StreamScores out;
  std::int64_t missing = 0;
  for (const auto& video : manifest.videos) {
    std::array<FrameRows, 3> aligned;
    std::array<const FrameRows*, 3> ptrs{nullptr, nullptr, nullptr};
    for (const auto& [stream, s] : scores) {
      const int i = static_cast<int>(stream);
      aligned[i] = align_to_frames(s, video);
      ptrs[i] = &aligned[i];
    }
    const FusedFrames fused = fuse(ptrs, config);
    for (const auto& frame : video.frames) {
      const auto pos = static_cast<std::size_t>(frame.frame_index);
      if (pos < fused.rows.size() && fused.rows[pos])
        out.rows.push_back({video.video_id, frame.frame_index, frame.frame_index + 1, *fused.rows[pos]});
      else
        ++missing;
    }
  }
  if (unpredicted) *unpredicted = missing;
  return out;
}

namespace {

constexpr std::string_view kCsvHeader =
    "video_id,start_frame,end_frame,neutral,anger,disgust,fear,happiness,sadness,surprise,other";

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    fields.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void write_scores_csv(std::ostream& out, const StreamScores& scores) {
  out << kCsvHeader << '\n';
  char buf[32];
  for (const auto& r : scores.rows) {
    if (r.video_id.find_first_of(",\n\r") != std::string::npos)
      throw ArgumentError("video_id cannot contain commas or newlines: " + r.video_id);
    out << r.video_id << ',' << r.start_frame << ',' << r.end_frame;
    for (double v : r.scores) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

StreamScores read_scores_csv(std::istream& in, Stream stream) {
  StreamScores scores;
  scores.stream = stream;
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty score file", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError("unexpected score file header", line_no);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3 + kNumClasses)
      throw ParseError("score row must have " + std::to_string(3 + kNumClasses) + " fields", line_no);
    ScoreWindow w;
    w.video_id = std::string(fields[0]);
    if (w.video_id.empty()) throw ParseError("empty video_id", line_no);
    if (!parse_number(fields[1], w.start_frame) || !parse_number(fields[2], w.end_frame) || w.start_frame < 0 ||
        w.end_frame <= w.start_frame)
      throw ParseError("bad frame range", line_no);
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
      if (!parse_number(fields[3 + c], w.scores[c]) || !(w.scores[c] >= 0.0) || !std::isfinite(w.scores[c]))
        throw ParseError("bad score '" + std::string(fields[3 + c]) + "'", line_no);
      sum += w.scores[c];
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ParseError("scores do not sum to 1", line_no);
    scores.rows.push_back(std::move(w));
  }
  return scores;
}

void save_scores_csv(const std::filesystem::path& path, const StreamScores& scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_scores_csv(out, scores);
}

StreamScores load_scores_csv(const std::filesystem::path& path, Stream stream) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return read_scores_csv(in, stream);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

void write_report_text(std::ostream& out, const EvaluationReport& report) {
  char buf[160];
  for (const auto& row : report.rows) {
    out << "== " << row.name << " ==\n";
    std::snprintf(buf, sizeof buf, "%-10s %9s %10s %10s %10s\n", "class", "support", "precision", "recall", "f1");
    out << buf;
    for (int k = 0; k < kNumClasses; ++k) {
      const auto& s = row.report.per_class[k];
      std::snprintf(buf, sizeof buf, "%-10s %9lld %10.4f %10.4f %10.4f\n",
                    std::string(class_name(static_cast<Expression>(k))).c_str(),
                    static_cast<long long>(row.report.support[k]), s.precision, s.recall, s.f1);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "macro F1 %.4f (frames=%lld unpredicted=%lld)\n\n", row.report.macro_f1,
                  static_cast<long long>(row.report.total_frames), static_cast<long long>(row.report.unpredicted));
    out << buf;
  }
  out << "Summary (fusion=" << fusion_rule_name(report.fusion.rule) << ")\n";
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%-10s %.3f\n", row.name.c_str(), row.report.macro_f1);
    out << buf;
  }
}

void write_report_kv(std::ostream& out, const EvaluationReport& report) {
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "fusion.rule=" << fusion_rule_name(report.fusion.rule) << '\n';
  out << "fusion.weights=" << num(report.fusion.weights[0]) << ',' << num(report.fusion.weights[1]) << ','
      << num(report.fusion.weights[2]) << '\n';
  for (const auto& row : report.rows) {
    const auto& r = row.report;
    out << row.name << ".macro_f1=" << num(r.macro_f1) << '\n';
    out << row.name << ".frames=" << r.total_frames << '\n';
    out << row.name << ".unpredicted=" << r.unpredicted << '\n';
    for (int k = 0; k < kNumClasses; ++k) {
      const std::string prefix = row.name + "." + std::string(class_key(static_cast<Expression>(k)));
      out << prefix << ".support=" << r.support[k] << '\n';
      out << prefix << ".precision=" << num(r.per_class[k].precision) << '\n';
      out << prefix << ".recall=" << num(r.per_class[k].recall) << '\n';
      out << prefix << ".f1=" << num(r.per_class[k].f1) << '\n';
    }
  }
}

}  // namespace fer
