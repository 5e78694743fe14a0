#include "fer/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "fer/error.hpp"
#include "fer/rng.hpp"
#include "fer/wav.hpp"

namespace fs = std::filesystem;

namespace fer {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// round(a / b) for a >= 0, b > 0, halves rounded up.
std::int64_t round_div(std::int64_t a, std::int64_t b) { return (2 * a + b) / (2 * b); }

std::int64_t frame_at(std::int64_t k, const Rational& fps) { return round_div(k * fps.num, fps.den); }

void validate_fps(const Rational& fps) {
  if (fps.num <= 0 || fps.den <= 0) throw ArgumentError("fps must be positive: " + to_string(fps));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_frame_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace

Rational parse_rational(std::string_view text) {
  text = trim(text);
  Rational r;
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    r.den = 1;
    if (!parse_int(text, r.num)) throw ArgumentError("bad rational '" + std::string(text) + "'");
  } else if (!parse_int(text.substr(0, slash), r.num) || !parse_int(text.substr(slash + 1), r.den)) {
    throw ArgumentError("bad rational '" + std::string(text) + "'");
  }
  validate_fps(r);
  return r;
}

std::string to_string(const Rational& r) {
  return r.den == 1 ? std::to_string(r.num) : std::to_string(r.num) + "/" + std::to_string(r.den);
}

const FrameRecord* VideoRecord::find_frame(std::int64_t frame_index) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame_index,
                             [](const FrameRecord& f, std::int64_t i) { return f.frame_index < i; });
  return (it != frames.end() && it->frame_index == frame_index) ? &*it : nullptr;
}

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "validation"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "validation" || name == "val") return Split::Validation;
  throw ArgumentError("unknown split '" + std::string(name) + "'");
}

const VideoRecord* DatasetManifest::find_video(std::string_view video_id) const {
  for (const auto& v : videos)
    if (v.video_id == video_id) return &v;
  return nullptr;
}

std::size_t DatasetManifest::frame_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.frames.size();
  return n;
}

std::vector<Expression> parse_annotation_file(std::string_view text, std::size_t expected_frame_count) {
  std::vector<Expression> labels;
  long line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    line = trim(line);
    if (line.empty() && text.empty()) break;  // trailing newline
    std::int64_t value = 0;
    if (!parse_int(line, value))
      throw ParseError("malformed label '" + std::string(line) + "'", line_no);
    auto label = expression_from_int(static_cast<long>(value));
    if (!label) throw ParseError("label out of range: " + std::to_string(value), line_no);
    labels.push_back(*label);
  }
  if (!header_seen) throw ParseError("missing header line", 1);
  if (labels.size() != expected_frame_count) {
    std::clog << "warning: annotation has " << labels.size() << " labels, expected "
              << expected_frame_count << "\n";
  }
  return labels;
}

std::string render_annotation_file(std::span<const Expression> labels) {
  std::string out = "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n";
  for (auto l : labels) {
    out += std::to_string(index_of(l));
    out += '\n';
  }
  return out;
}

DatasetManifest build_manifest(const fs::path& root, Split split, Rational fps) {
  validate_fps(fps);
  if (!fs::is_directory(root)) throw IoError("dataset root not found: " + root.string());
  DatasetManifest manifest;
  manifest.split = split;
  const fs::path split_dir = root / std::string(split_name(split));
  if (!fs::is_directory(split_dir)) return manifest;

  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(split_dir)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name == "annotations" || name == "audio") continue;
    ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());

  std::vector<std::string> missing;
  for (const auto& id : ids)
    if (!fs::is_regular_file(split_dir / "annotations" / (id + ".txt"))) missing.push_back(id);
  if (!missing.empty()) {
    std::string msg = "missing annotation file for video(s):";
    for (const auto& id : missing) msg += " " + id;
    throw IntegrityError(msg);
  }

  for (const auto& id : ids) {
    VideoRecord video;
    video.video_id = id;
    video.fps = fps;
    const fs::path frames_dir = split_dir / id / "frames";
    if (fs::is_directory(frames_dir)) {
      for (const auto& entry : fs::directory_iterator(frames_dir)) {
        if (!entry.is_regular_file() || !is_frame_image(entry.path())) continue;
        std::int64_t index = 0;
        if (!parse_int(entry.path().stem().string(), index) || index < 0)
          throw IntegrityError("bad frame file name: " + entry.path().string());
        video.frames.push_back({id, index, entry.path().string(), Expression::Unlabeled});
      }
    }
    std::sort(video.frames.begin(), video.frames.end(),
              [](const FrameRecord& a, const FrameRecord& b) { return a.frame_index < b.frame_index; });
    for (std::size_t i = 1; i < video.frames.size(); ++i)
      if (video.frames[i].frame_index == video.frames[i - 1].frame_index)
        throw IntegrityError("duplicate frame index " + std::to_string(video.frames[i].frame_index) +
                             " in video " + id);

    const fs::path ann = split_dir / "annotations" / (id + ".txt");
    std::vector<Expression> labels;
    try {
      labels = parse_annotation_file(read_file(ann), static_cast<std::size_t>(video.timeline_length()));
    } catch (const ParseError& e) {
      throw ParseError(ann.string() + ": " + e.detail(), e.line());
    }
    for (auto& f : video.frames) {
      const auto i = static_cast<std::size_t>(f.frame_index);
      f.label = i < labels.size() ? labels[i] : Expression::Unlabeled;
    }

    const fs::path wav = split_dir / "audio" / (id + ".wav");
    if (fs::is_regular_file(wav)) {
      video.audio_path = wav.string();
      video.audio_sample_rate = read_wav_info(wav).sample_rate;
    }
    manifest.videos.push_back(std::move(video));
  }
  return manifest;
}

ClassDistribution class_distribution(const DatasetManifest& manifest) {
  ClassDistribution dist;
  for (const auto& v : manifest.videos)
    for (const auto& f : v.frames)
      if (is_labeled(f.label)) ++dist.counts[index_of(f.label)];
  dist.total = std::accumulate(dist.counts.begin(), dist.counts.end(), std::int64_t{0});
  for (int c = 0; c < kNumClasses; ++c)
    dist.ratios[c] = dist.total == 0 ? 0.0 : static_cast<double>(dist.counts[c]) / static_cast<double>(dist.total);
  return dist;
}

DatasetManifest subsample_per_class(const DatasetManifest& manifest, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ArgumentError("subsample fraction must lie in (0, 1], got " + std::to_string(fraction));

  struct Ref {
    std::size_t video;
    std::size_t frame;
  };
  std::array<std::vector<Ref>, kNumClasses> by_class;
  for (std::size_t v = 0; v < manifest.videos.size(); ++v)
    for (std::size_t f = 0; f < manifest.videos[v].frames.size(); ++f) {
      const auto label = manifest.videos[v].frames[f].label;
      if (is_labeled(label)) by_class[index_of(label)].push_back({v, f});
    }

  std::vector<std::vector<bool>> keep(manifest.videos.size());
  for (std::size_t v = 0; v < manifest.videos.size(); ++v) keep[v].assign(manifest.videos[v].frames.size(), false);

  for (int c = 0; c < kNumClasses; ++c) {
    auto& refs = by_class[c];
    const auto n = refs.size();
    // The epsilon absorbs representation error such as 0.1 * 30 = 3.0000000000000004.
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(refs[i], refs[j]);
      keep[refs[i].video][refs[i].frame] = true;
    }
  }

  DatasetManifest out;
  out.split = manifest.split;
  for (std::size_t v = 0; v < manifest.videos.size(); ++v) {
    VideoRecord video = manifest.videos[v];
    video.frames.clear();
    for (std::size_t f = 0; f < manifest.videos[v].frames.size(); ++f)
      if (keep[v][f]) video.frames.push_back(manifest.videos[v].frames[f]);
    out.videos.push_back(std::move(video));
  }
  return out;
}

SamplingPlan sample_visual_frames(const VideoRecord& video) {
  SamplingPlan plan{Stream::Visual, {}};
  plan.windows.reserve(video.frames.size());
  for (const auto& f : video.frames)
    plan.windows.push_back({video.video_id, f.frame_index, f.frame_index + 1, {f.frame_index}});
  return plan;
}

SamplingPlan sample_temporal_shots(const VideoRecord& video, std::optional<std::uint64_t> random_seed) {
  validate_fps(video.fps);
  if (video.fps.num < kTemporalShotLength * video.fps.den)
    throw UnsupportedRateError("temporal shots need fps >= 16, video " + video.video_id + " has " +
                               to_string(video.fps));
  SamplingPlan plan{Stream::Temporal, {}};
  const auto n = video.timeline_length();
  for (std::int64_t k = 0;; ++k) {
    const auto start = frame_at(k, video.fps);
    const auto end = frame_at(k + 1, video.fps);
    if (end > n) break;
    SamplingWindow w{video.video_id, start, end, {}};
    const auto len = end - start;
    if (random_seed) {
      std::vector<std::int64_t> pool(static_cast<std::size_t>(len));
      std::iota(pool.begin(), pool.end(), start);
      Rng rng(mix_seed(*random_seed, static_cast<std::uint64_t>(k)));
      for (int i = 0; i < kTemporalShotLength; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      w.selected.assign(pool.begin(), pool.begin() + kTemporalShotLength);
      std::sort(w.selected.begin(), w.selected.end());
    } else {
      for (std::int64_t j = 0; j < kTemporalShotLength; ++j)
        w.selected.push_back(std::min(start + round_div(j * len, kTemporalShotLength), end - 1));
    }
    plan.windows.push_back(std::move(w));
  }
  return plan;
}

SamplingPlan sample_audio_windows(const VideoRecord& video) {
  validate_fps(video.fps);
  if (!video.audio_path)
    throw StreamUnavailableError("video " + video.video_id + " has no audio");
  SamplingPlan plan{Stream::Audio, {}};
  const Rational span{video.fps.num * kAudioWindowSeconds, video.fps.den};
  const auto n = video.timeline_length();
  for (std::int64_t k = 0;; ++k) {
    const auto start = frame_at(k, span);
    const auto end = frame_at(k + 1, span);
    if (end > n) break;
    SamplingWindow w{video.video_id, start, end, {}};
    w.selected.resize(static_cast<std::size_t>(end - start));
    std::iota(w.selected.begin(), w.selected.end(), start);
    plan.windows.push_back(std::move(w));
  }
  return plan;
}

SamplingPlan sample_stream(Stream stream, const VideoRecord& video) {
  switch (stream) {
    case Stream::Visual: return sample_visual_frames(video);
    case Stream::Temporal: return sample_temporal_shots(video);
    case Stream::Audio: return sample_audio_windows(video);
  }
  throw InvariantError("unknown stream");
}

std::pair<double, double> window_seconds(const SamplingWindow& window, const Rational& fps) {
  const double rate = fps.value();
  return {static_cast<double>(window.start_frame) / rate, static_cast<double>(window.end_frame) / rate};
}

Expression window_label(const VideoRecord& video, const SamplingWindow& window) {
  std::array<std::int64_t, kNumClasses> votes{};
  bool any = false;
  for (auto i = window.start_frame; i < window.end_frame; ++i) {
    const auto* f = video.find_frame(i);
    if (f && is_labeled(f->label)) {
      ++votes[index_of(f->label)];
      any = true;
    }
  }
  if (!any) return Expression::Unlabeled;
  return expression_at(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  auto check = [](const std::string& s) {
    if (s.find_first_of("\t\n\r") != std::string::npos)
      throw ArgumentError("manifest field contains a tab or newline: " + s);
  };
  for (const auto& v : manifest.videos) {
    check(v.video_id);
    if (v.audio_path) check(*v.audio_path);
    const auto fps = to_string(v.fps);
    for (const auto& f : v.frames) {
      check(f.image_path);
      out << v.video_id << '\t' << f.frame_index << '\t' << f.image_path << '\t' << index_of(f.label)
          << '\t' << v.audio_path.value_or("") << '\t' << fps << '\n';
    }
  }
}

DatasetManifest read_manifest(std::istream& in, Split split) {
  DatasetManifest manifest;
  manifest.split = split;
  std::map<std::string, std::size_t, std::less<>> index;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 6> fields;
    std::string_view rest = line;
    for (int i = 0; i < 6; ++i) {
      const auto tab = rest.find('\t');
      if ((tab == std::string_view::npos) != (i == 5))
        throw ParseError("manifest record must have 6 tab-separated fields", line_no);
      fields[i] = rest.substr(0, tab);
      if (tab != std::string_view::npos) rest = rest.substr(tab + 1);
    }
    std::int64_t frame_index = 0, label_value = 0;
    if (!parse_int(fields[1], frame_index) || frame_index < 0)
      throw ParseError("bad frame_index '" + std::string(fields[1]) + "'", line_no);
    if (!parse_int(fields[3], label_value) || !expression_from_int(static_cast<long>(label_value)))
      throw ParseError("bad label '" + std::string(fields[3]) + "'", line_no);
    if (fields[0].empty() || fields[2].empty()) throw ParseError("empty video_id or image_path", line_no);
    Rational fps;
    try {
      fps = parse_rational(fields[5]);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), line_no);
    }

    auto it = index.find(fields[0]);
    if (it == index.end()) {
      VideoRecord v;
      v.video_id = std::string(fields[0]);
      v.fps = fps;
      if (!fields[4].empty()) v.audio_path = std::string(fields[4]);
      it = index.emplace(v.video_id, manifest.videos.size()).first;
      manifest.videos.push_back(std::move(v));
    }
    auto& video = manifest.videos[it->second];
    video.frames.push_back({video.video_id, frame_index, std::string(fields[2]),
                            static_cast<Expression>(label_value)});
  }
  for (auto& v : manifest.videos) {
    std::sort(v.frames.begin(), v.frames.end(),
              [](const FrameRecord& a, const FrameRecord& b) { return a.frame_index < b.frame_index; });
    for (std::size_t i = 1; i < v.frames.size(); ++i)
      if (v.frames[i].frame_index == v.frames[i - 1].frame_index)
        throw IntegrityError("duplicate frame index in manifest for video " + v.video_id);
  }
  return manifest;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_manifest(out, manifest);
}

DatasetManifest load_manifest(const fs::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  return read_manifest(in, split);
}

}  // namespace fer
