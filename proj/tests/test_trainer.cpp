#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "fer/error.hpp"
#include "fer/rng.hpp"
#include "fer/streams.hpp"
#include "fer/synthetic.hpp"
#include "fer/trainer.hpp"
#include "support.hpp"

using namespace fer;

namespace {

// Two classes told apart by which colour fills the top half.
InMemorySource separable(int n, std::uint64_t seed, Stream stream = Stream::Visual, int frames = 1) {
  Rng rng(seed);
  std::vector<InMemorySource::Example> ex;
  for (int i = 0; i < n; ++i) {
    const bool happy = i % 2 == 0;
    Image img(16, 16, 3);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const double noise = rng.uniform(-0.1, 0.1);
        img.at(y, x, 0) = static_cast<float>((happy && y < 8 ? 0.8 : 0.3) + noise);
        img.at(y, x, 1) = static_cast<float>((!happy && y < 8 ? 0.8 : 0.3) + noise);
        img.at(y, x, 2) = 0.3f;
      }
    ex.push_back({"ex" + std::to_string(i), happy ? Expression::Happiness : Expression::Anger,
                  std::vector<Image>(static_cast<std::size_t>(frames), img)});
  }
  return InMemorySource(stream, std::move(ex));
}

}  // namespace

TEST_CASE("zero learning rate leaves the head at its initialization") {
  auto src = separable(1, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.milestones = {};
  cfg.lr0 = 0.0;
  const auto backbone = backbone_for(Stream::Visual);
  auto h = train(src, cfg, Augmenter(default_augment(Stream::Visual), backbone), backbone);
  CHECK(h.head == LinearHead::initialize(192, cfg.seed));
  CHECK(h.steps == 1);
}

TEST_CASE("separable classes are learned with the default schedule") {
  auto src = separable(64, 2);
  TrainConfig cfg;
  const auto backbone = backbone_for(Stream::Visual);
  const Augmenter aug(default_augment(Stream::Visual), backbone);
  auto h = train(src, cfg, aug, backbone);
  CHECK(h.steps == 70 * 2);
  REQUIRE(h.epochs.size() == 70);
  CHECK(h.epochs[10].mean_loss < h.epochs[0].mean_loss);
  for (int e = 0; e < 70; ++e) CHECK(h.epochs[e].lr == lr_schedule(e, cfg));
  CHECK(accuracy(src, aug, backbone, h.head) >= 0.99);
}

TEST_CASE("training is reproducible") {
  auto src = separable(40, 3);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.milestones = {3};
  cfg.batch_size = 8;
  cfg.seed = 17;
  const auto backbone = backbone_for(Stream::Visual);
  AugmentConfig ac = default_augment(Stream::Visual);
  ac.minority = {Expression::Anger};
  const Augmenter aug(ac, backbone);
  auto a = train(src, cfg, aug, backbone), b = train(src, cfg, aug, backbone);
  CHECK(a.head == b.head);
  for (int e = 0; e < 5; ++e) CHECK(a.epochs[e].mean_loss == b.epochs[e].mean_loss);
  cfg.seed = 18;
  CHECK(train(src, cfg, aug, backbone).head != a.head);

  std::ostringstream log;
  write_training_log(log, a, "stream=visual");
  CHECK(log.str().rfind("# stream=visual\nepoch=0 mean_loss=", 0) == 0);
}

TEST_CASE("training without labels is an error") {
  InMemorySource src(Stream::Visual, {{"u", Expression::Unlabeled, {Image(16, 16, 3)}}});
  const auto backbone = backbone_for(Stream::Visual);
  CHECK_THROWS_AS(train(src, TrainConfig{}, Augmenter(default_augment(Stream::Visual), backbone), backbone), Error);
}

TEST_CASE("half-mix batches realize the mixed loss") {
  auto src = separable(32, 4);
  AugmentConfig ac = default_augment(Stream::Visual);
  ac.halfmix_probability = 1.0;
  ac.minority = {Expression::Anger};
  const auto backbone = backbone_for(Stream::Visual);
  const Augmenter aug(ac, backbone);
  std::vector<std::size_t> idx(32);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto batch = aug.prepare_batch(src, idx, 99);
  const LinearHead head = LinearHead::initialize(192, 5);
  int mixed = 0;
  for (const auto& ex : batch) {
    REQUIRE(ex.mix);
    REQUIRE(ex.reference_label);
    ++mixed;
    const double a = ex.mix->spec.alpha;
    const auto z = forward(backbone, head, ex.frames);
    const double direct = soft_cross_entropy(z, ex.label);
    const double split = a * soft_cross_entropy(z, ex.input_label) + (1 - a) * soft_cross_entropy(z, *ex.reference_label);
    CHECK(std::abs(direct - split) < 1e-12);
  }
  CHECK(mixed == 32);

  const auto again = aug.prepare_batch(src, idx, 99);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    CHECK(again[j].frames == batch[j].frames);
    CHECK(again[j].label == batch[j].label);
  }
}

TEST_CASE("temporal crops share one window across the shot") {
  auto src = separable(2, 5, Stream::Temporal, 16);
  const auto backbone = backbone_for(Stream::Temporal);
  AugmentConfig ac = default_augment(Stream::Temporal);
  CHECK(ac.random_crop);
  CHECK(!ac.halfmix);
  const Augmenter aug(ac, backbone);
  const std::vector<std::size_t> idx = {0, 1};
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& ex : aug.prepare_batch(src, idx, seed)) {
      REQUIRE(ex.frames.size() == 16);
      CHECK(ex.frames.front().height() == 224);
      for (const auto& f : ex.frames) CHECK(f == ex.frames.front());
      CHECK(!ex.mix);
    }
}

TEST_CASE("stream windows and predictions over a synthetic corpus") {
  fer::testing::TempDir dir("streams");
  SyntheticOptions opt;
  opt.train_videos = 1;
  opt.validation_videos = 1;
  opt.frames_per_video = 300;
  opt.segment_frames = 60;
  opt.fps = {30, 1};
  opt.frame_size = 16;
  write_synthetic_dataset(dir.path(), opt);
  const auto manifest = build_manifest(dir.path(), Split::Validation, {30, 1});
  REQUIRE(manifest.videos.size() == 1);
  REQUIRE(manifest.videos[0].audio_path);

  auto cache = std::make_shared<ImageCache>();
  const auto head = LinearHead::initialize(192, 1);
  const auto visual = predict_stream(manifest, Stream::Visual, head, MelConfig{}, cache);
  const auto temporal = predict_stream(manifest, Stream::Temporal, head, MelConfig{}, cache);
  const auto audio = predict_stream(manifest, Stream::Audio, head, MelConfig{}, cache);
  CHECK(visual.rows.size() == 300);
  CHECK(temporal.rows.size() == 10);
  CHECK(audio.rows.size() == 5);
  for (const auto* s : {&visual, &temporal, &audio})
    for (const auto& r : s->rows) {
      double sum = 0;
      for (double p : r.scores) sum += p;
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  CHECK(audio.rows[2].start_frame == 120);
  CHECK(audio.rows[2].end_frame == 180);

  WindowSource::Options labeled;
  labeled.labeled_only = true;
  // Frame 0 is unannotated, so the labeled visual source has one fewer window.
  CHECK(WindowSource(manifest, Stream::Visual, labeled, cache).size() == 299);
}
