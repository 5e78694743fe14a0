#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fer/dataset.hpp"
#include "fer/error.hpp"
#include "fer/synthetic.hpp"
#include "support.hpp"

using namespace fer;
using fer::testing::spit;
using fer::testing::TempDir;

namespace {

const std::string kHeader = "Neutral,Anger,Disgust,Fear,Happiness,Sadness,Surprise,Other\n";

VideoRecord make_video(const std::string& id, std::int64_t n, Rational fps = {30, 1}) {
  VideoRecord v;
  v.video_id = id;
  v.fps = fps;
  for (std::int64_t i = 0; i < n; ++i)
    v.frames.push_back({id, i, id + "/" + std::to_string(i) + ".jpg", expression_at(static_cast<int>(i % 8))});
  return v;
}

// Writes frames (empty files are enough for indexing) and an annotation file.
void write_video(const std::filesystem::path& split_dir, const std::string& id,
                 const std::vector<int>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.jpg", i);
    spit(split_dir / id / "frames" / name, "");
  }
  std::string text = kHeader;
  for (int l : labels) text += std::to_string(l) + "\n";
  spit(split_dir / "annotations" / (id + ".txt"), text);
}

}  // namespace

TEST_CASE("annotation file maps the label alphabet") {
  auto labels = parse_annotation_file(kHeader + "0\n4\n-1", 3);
  CHECK(labels == std::vector<Expression>{Expression::Neutral, Expression::Happiness, Expression::Unlabeled});
  CHECK(parse_annotation_file(kHeader + "7\n", 1) == std::vector<Expression>{Expression::Other});
}

TEST_CASE("annotation errors name the line") {
  try {
    parse_annotation_file(kHeader + "8\n", 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  try {
    parse_annotation_file(kHeader + "1\n2\nx\n", 3);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_annotation_file("", 0), ParseError);
}

TEST_CASE("annotation render and parse round-trip") {
  std::vector<Expression> labels;
  for (int i = -1; i < 8; ++i) labels.push_back(static_cast<Expression>(i));
  CHECK(parse_annotation_file(render_annotation_file(labels), labels.size()) == labels);
}

TEST_CASE("build_manifest on an empty root") {
  TempDir dir("empty");
  auto m = build_manifest(dir.path(), Split::Train);
  CHECK(m.videos.empty());
  CHECK_THROWS_AS(build_manifest(dir / "missing", Split::Train), IoError);
}

TEST_CASE("build_manifest keeps every frame of a 90-frame video") {
  TempDir dir("ninety");
  std::vector<int> labels(90, 4);
  write_video(dir / "train", "v1", labels);
  auto m = build_manifest(dir.path(), Split::Train);
  REQUIRE(m.videos.size() == 1);
  CHECK(m.videos[0].frames.size() == 90);
  CHECK(!m.videos[0].audio_path);
}

TEST_CASE("build_manifest matches a hand-written manifest") {
  TempDir dir("fixture");
  const auto split = dir / "validation";
  write_video(split, "b", {1, -1});
  write_video(split, "a", {0, 7, 3});
  // A frame past the end of the annotation file stays unlabeled.
  spit(split / "a" / "frames" / "00003.png", "");
  spit(split / "a" / "frames" / "notes.txt", "");

  DatasetManifest expected;
  expected.split = Split::Validation;
  auto frame = [&](const std::string& id, std::int64_t i, const char* ext, Expression e) {
    char name[32];
    std::snprintf(name, sizeof name, "%05lld.%s", static_cast<long long>(i), ext);
    return FrameRecord{id, i, (split / id / "frames" / name).string(), e};
  };
  VideoRecord a{"a", {30, 1}, {}, std::nullopt, 16000};
  a.frames = {frame("a", 0, "jpg", Expression::Neutral), frame("a", 1, "jpg", Expression::Other),
              frame("a", 2, "jpg", Expression::Fear), frame("a", 3, "png", Expression::Unlabeled)};
  VideoRecord b{"b", {30, 1}, {}, std::nullopt, 16000};
  b.frames = {frame("b", 0, "jpg", Expression::Anger), frame("b", 1, "jpg", Expression::Unlabeled)};
  expected.videos = {a, b};

  CHECK(build_manifest(dir.path(), Split::Validation) == expected);
}

TEST_CASE("build_manifest lists every video missing annotations") {
  TempDir dir("missing_ann");
  write_video(dir / "train", "ok", {0});
  spit(dir / "train" / "x1" / "frames" / "00000.jpg", "");
  spit(dir / "train" / "x2" / "frames" / "00000.jpg", "");
  try {
    build_manifest(dir.path(), Split::Train);
    FAIL("expected an integrity error");
  } catch (const IntegrityError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("x1") != std::string::npos);
    CHECK(msg.find("x2") != std::string::npos);
    CHECK(msg.find("ok") == std::string::npos);
  }
}

TEST_CASE("class_distribution reproduces the reference train ratios") {
  auto m = synthetic_count_manifest(kReferenceTrainCounts, Split::Train);
  auto d = class_distribution(m);
  CHECK(d.total == 574003);
  const char* expected[8] = {"0.306", "0.028", "0.019", "0.016", "0.157", "0.138", "0.052", "0.284"};
  for (int c = 0; c < 8; ++c) {
    CHECK(d.counts[c] == kReferenceTrainCounts[c]);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", d.ratios[c]);
    CHECK(std::string(buf) == expected[c]);
  }
}

TEST_CASE("class_distribution edge cases") {
  auto empty = class_distribution(DatasetManifest{});
  CHECK(empty.total == 0);
  for (double r : empty.ratios) CHECK(r == 0.0);

  DatasetManifest m;
  VideoRecord v = make_video("h", 10);
  for (auto& f : v.frames) f.label = Expression::Happiness;
  v.frames.push_back({"h", 10, "x.jpg", Expression::Unlabeled});
  m.videos.push_back(v);
  auto d = class_distribution(m);
  CHECK(d.total == 10);
  CHECK(d.ratios[index_of(Expression::Happiness)] == 1.0);

  double sum = 0;
  for (double r : class_distribution(synthetic_count_manifest(kReferenceValidationCounts, Split::Validation)).ratios)
    sum += r;
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("subsample_per_class keeps the ceiling per class") {
  DatasetManifest m;
  m.videos.push_back(make_video("a", 1000));
  auto full = subsample_per_class(m, 1.0, 3);
  CHECK(full == m);

  for (double f : {0.1, 0.25, 0.333, 0.5}) {
    auto before = class_distribution(m);
    auto after = class_distribution(subsample_per_class(m, f, 9));
    for (int c = 0; c < 8; ++c)
      CHECK(after.counts[c] == static_cast<std::int64_t>(std::ceil(f * static_cast<double>(before.counts[c]))));
  }

  DatasetManifest hundred;
  VideoRecord v = make_video("b", 100);
  for (auto& f : v.frames) f.label = Expression::Sadness;
  hundred.videos.push_back(v);
  CHECK(class_distribution(subsample_per_class(hundred, 0.1, 1)).total == 10);

  CHECK_THROWS_AS(subsample_per_class(m, 0.0, 1), ArgumentError);
  CHECK_THROWS_AS(subsample_per_class(m, 1.5, 1), ArgumentError);
}

TEST_CASE("subsample_per_class is seeded") {
  DatasetManifest m;
  m.videos.push_back(make_video("a", 1000));
  auto kept = [](const DatasetManifest& d) {
    std::set<std::int64_t> s;
    for (const auto& f : d.videos[0].frames) s.insert(f.frame_index);
    return s;
  };
  CHECK(kept(subsample_per_class(m, 0.1, 5)) == kept(subsample_per_class(m, 0.1, 5)));
  CHECK(kept(subsample_per_class(m, 0.1, 5)) != kept(subsample_per_class(m, 0.1, 6)));
}

TEST_CASE("temporal shots use a uniform stride") {
  auto plan = sample_temporal_shots(make_video("v", 90));
  REQUIRE(plan.windows.size() == 3);
  for (const auto& w : plan.windows) CHECK(w.selected.size() == 16);
  // round(k * 30 / 16), with halves rounded up, evaluated by hand.
  CHECK(plan.windows[0].selected ==
        std::vector<std::int64_t>{0, 2, 4, 6, 8, 9, 11, 13, 15, 17, 19, 21, 23, 24, 26, 28});
  CHECK(plan.windows[1].start_frame == 30);
  CHECK(plan.windows[1].selected.front() == 30);
  CHECK(sample_temporal_shots(make_video("v", 29)).windows.empty());
  CHECK_THROWS_AS(sample_temporal_shots(make_video("v", 90, {15, 1})), UnsupportedRateError);
}

TEST_CASE("temporal shots at a rational frame rate") {
  auto plan = sample_temporal_shots(make_video("v", 300, {30000, 1001}));
  REQUIRE(plan.windows.size() == 10);  // 300 frames at 29.97 fps is 10.01 s
  for (std::size_t k = 0; k + 1 < plan.windows.size(); ++k)
    CHECK(plan.windows[k].end_frame == plan.windows[k + 1].start_frame);
  for (const auto& w : plan.windows) {
    CHECK(w.selected.size() == 16);
    CHECK(std::is_sorted(w.selected.begin(), w.selected.end()));
    CHECK(std::adjacent_find(w.selected.begin(), w.selected.end()) == w.selected.end());
    CHECK(w.selected.front() >= w.start_frame);
    CHECK(w.selected.back() < w.end_frame);
  }
}

TEST_CASE("seeded temporal shots are sorted subsets") {
  auto v = make_video("v", 120);
  auto a = sample_temporal_shots(v, 11), b = sample_temporal_shots(v, 11);
  REQUIRE(a.windows.size() == 4);
  for (std::size_t k = 0; k < a.windows.size(); ++k) {
    const auto& w = a.windows[k];
    CHECK(w.selected == b.windows[k].selected);
    CHECK(w.selected.size() == 16);
    CHECK(std::adjacent_find(w.selected.begin(), w.selected.end(),
                             [](auto x, auto y) { return x >= y; }) == w.selected.end());
    CHECK(w.selected.front() >= w.start_frame);
    CHECK(w.selected.back() < w.end_frame);
  }
}

TEST_CASE("audio windows span two seconds") {
  auto v = make_video("v", 300);
  v.audio_path = "v.wav";
  auto plan = sample_audio_windows(v);
  REQUIRE(plan.windows.size() == 5);
  std::int64_t covered = 0;
  for (std::size_t k = 0; k < plan.windows.size(); ++k) {
    const auto& w = plan.windows[k];
    CHECK(w.end_frame - w.start_frame == 60);
    CHECK(w.start_frame == static_cast<std::int64_t>(k) * 60);
    covered += w.end_frame - w.start_frame;
  }
  CHECK(covered == 300);
  auto [begin, end] = window_seconds(plan.windows[2], v.fps);
  CHECK(begin == 4.0);
  CHECK(end == 6.0);

  auto short_video = make_video("s", 59);
  short_video.audio_path = "s.wav";
  CHECK(sample_audio_windows(short_video).windows.empty());
  CHECK_THROWS_AS(sample_audio_windows(make_video("n", 300)), StreamUnavailableError);

  auto odd = make_video("o", 250);
  odd.audio_path = "o.wav";
  CHECK(sample_audio_windows(odd).windows.size() == 4);  // floor(250 / 60)
}

TEST_CASE("visual plan has one window per frame") {
  auto plan = sample_visual_frames(make_video("v", 90));
  REQUIRE(plan.windows.size() == 90);
  for (const auto& w : plan.windows) {
    CHECK(w.end_frame == w.start_frame + 1);
    CHECK(w.selected == std::vector<std::int64_t>{w.start_frame});
  }
}

TEST_CASE("window label is the majority with low-index ties") {
  VideoRecord v = make_video("v", 6);
  const Expression seq[6] = {Expression::Fear, Expression::Anger, Expression::Fear,
                             Expression::Anger, Expression::Unlabeled, Expression::Unlabeled};
  for (int i = 0; i < 6; ++i) v.frames[i].label = seq[i];
  CHECK(window_label(v, {"v", 0, 4, {}}) == Expression::Anger);
  CHECK(window_label(v, {"v", 0, 3, {}}) == Expression::Fear);
  CHECK(window_label(v, {"v", 4, 6, {}}) == Expression::Unlabeled);
}

TEST_CASE("manifest file round-trip") {
  DatasetManifest m;
  m.split = Split::Validation;
  m.videos.push_back(make_video("a", 5, {30000, 1001}));
  m.videos.back().audio_path = "audio/a.wav";
  m.videos.push_back(make_video("b", 3));
  std::stringstream ss;
  write_manifest(ss, m);
  auto back = read_manifest(ss, Split::Validation);
  REQUIRE(back.videos.size() == 2);
  CHECK(back.videos[0].frames == m.videos[0].frames);
  CHECK(back.videos[0].fps == m.videos[0].fps);
  CHECK(back.videos[0].audio_path == m.videos[0].audio_path);
  CHECK(back.videos[1].frames == m.videos[1].frames);
  CHECK(!back.videos[1].audio_path);
}

TEST_CASE("manifest reader rejects duplicates and bad rows") {
  std::istringstream dup("a\t0\tx.jpg\t1\t\t30\na\t0\ty.jpg\t1\t\t30\n");
  CHECK_THROWS_AS(read_manifest(dup, Split::Train), Error);
  std::istringstream bad("a\t0\tx.jpg\t9\t\t30\n");
  try {
    read_manifest(bad, Split::Train);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("rational parsing") {
  CHECK(parse_rational("30") == Rational{30, 1});
  CHECK(parse_rational("30000/1001") == Rational{30000, 1001});
  CHECK_THROWS_AS(parse_rational("0"), ArgumentError);
  CHECK_THROWS_AS(parse_rational("30/0"), ArgumentError);
  CHECK_THROWS_AS(parse_rational("abc"), ArgumentError);
  CHECK(to_string(Rational{30000, 1001}) == "30000/1001");
}
