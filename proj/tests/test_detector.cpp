#include <doctest.h>

#include <cmath>
#include <random>

#include "vod/detector.hpp"
#include "vod/synth.hpp"

using namespace vod;

namespace {

DetectorConfig small_config() {
  DetectorConfig cfg;
  cfg.input_h = 64;
  cfg.input_w = 64;
  cfg.strides = {8, 16, 32};
  cfg.channels = 16;
  cfg.head_depth = 1;
  cfg.num_classes = 3;
  cfg.seed = 5;
  return cfg;
}

// O(n^2) reference suppression.
std::vector<Detection> nms_reference(std::vector<Detection> dets, float thr, int top_k) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    if (a.x1 != b.x1) return a.x1 < b.x1;
    return a.y1 < b.y1;
  });
  std::vector<bool> dead(dets.size(), false);
  std::vector<Detection> out;
  for (std::size_t i = 0; i < dets.size() && static_cast<int>(out.size()) < top_k; ++i) {
    if (dead[i]) continue;
    out.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j)
      if (!dead[j] && dets[j].class_id == dets[i].class_id &&
          box_iou(dets[i], dets[j]) > thr)
        dead[j] = true;
  }
  return out;
}

Tensor noise_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  Tensor img({3, h, w});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = dist(rng);
  return img;
}

}  // namespace

TEST_CASE("build_pyramid: level shapes follow strides") {
  Detector det(small_config());
  FeaturePyramid p = det.build_pyramid(noise_image(64, 64, 1));
  REQUIRE(p.levels.size() == 3);
  CHECK(p.levels[0].features.dim(1) == 8);
  CHECK(p.levels[0].features.dim(2) == 8);
  CHECK(p.levels[1].features.dim(1) == 4);
  CHECK(p.levels[2].features.dim(1) == 2);
  for (const auto& lvl : p.levels) CHECK(lvl.features.dim(0) == 16);
}

TEST_CASE("build_pyramid: single stride-4 level is quarter resolution") {
  DetectorConfig cfg;
  cfg.input_h = 512;
  cfg.input_w = 512;
  cfg.strides = {4};
  cfg.channels = 16;
  cfg.head_depth = 1;
  cfg.decode_kind = DecodeKind::HeatmapPeak;
  Detector det(cfg);
  FeaturePyramid p = det.build_pyramid(noise_image(512, 512, 2));
  REQUIRE(p.levels.size() == 1);
  CHECK(p.levels[0].features.dim(1) == 128);
  CHECK(p.levels[0].features.dim(2) == 128);
}

TEST_CASE("build_pyramid is bitwise deterministic for a fixed seed") {
  Detector a(small_config()), b(small_config());
  Tensor img = noise_image(64, 64, 3);
  FeaturePyramid pa = a.build_pyramid(img), pb = b.build_pyramid(img);
  for (std::size_t i = 0; i < pa.levels.size(); ++i)
    CHECK(pa.levels[i].features.values() == pb.levels[i].features.values());
}

TEST_CASE("build_pyramid rejects a wrong-sized image") {
  Detector det(small_config());
  CHECK_THROWS_AS(det.build_pyramid(noise_image(32, 64, 1)), ConfigError);
}

TEST_CASE("run_heads: only active levels produce output") {
  Detector det(small_config());
  FeaturePyramid p = det.build_pyramid(noise_image(64, 64, 4));
  auto all = det.run_heads(p, {0, 1, 2});
  CHECK(all.size() == 3);
  auto top = det.run_heads(p, {2});
  CHECK(top.size() == 1);
  CHECK(top.count(2) == 1);
  auto none = det.run_heads(p, {});
  CHECK(none.empty());
}

TEST_CASE("decode_level: zero maps stay below a 0.5 threshold") {
  Detector det(small_config());
  RawMaps raw;
  raw.cls = Tensor({3, 8, 8});
  raw.reg = Tensor({4, 8, 8});
  raw.ctr = Tensor({1, 8, 8});
  CHECK(det.decode_level(raw, 0, 0.5f).empty());
}

TEST_CASE("decode_level: threshold 0 yields one candidate per location") {
  Detector det(small_config());
  FeaturePyramid p = det.build_pyramid(noise_image(64, 64, 5));
  auto heads = det.run_heads(p, {0, 1, 2});
  CHECK(det.decode_level(heads.at(0), 0, 0.0f).size() == 8 * 8);
  CHECK(det.decode_level(heads.at(1), 1, 0.0f).size() == 4 * 4);
}

TEST_CASE("decoded detections carry their source level") {
  Detector det(small_config());
  FeaturePyramid p = det.build_pyramid(noise_image(64, 64, 6));
  auto heads = det.run_heads(p, {0, 1, 2});
  for (int li = 0; li < 3; ++li)
    for (const auto& d : det.decode_level(heads.at(li), li, 0.0f)) {
      CHECK(d.level_index == li);
      CHECK(d.x1 >= 0.0f);
      CHECK(d.x2 <= 64.0f);
      CHECK(d.x1 < d.x2);
      CHECK(d.y1 < d.y2);
    }
}

TEST_CASE("nms: trivial overlap cases") {
  Detection a{10, 10, 30, 30, 0.9f, 0, 0};
  Detection b{10, 10, 30, 30, 0.8f, 0, 0};
  auto kept = nms({a, b}, 0.5f, 100);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == doctest::Approx(0.9f));

  Detection c{50, 50, 60, 60, 0.7f, 0, 0};
  CHECK(nms({a, c}, 0.5f, 100).size() == 2);
}

TEST_CASE("nms matches the brute-force oracle on random boxes") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> pos(0.0f, 50.0f), sz(5.0f, 25.0f), sc(0.0f, 1.0f);
  std::uniform_int_distribution<int> cls(0, 2);
  std::vector<Detection> dets;
  for (int i = 0; i < 50; ++i) {
    Detection d;
    d.x1 = pos(rng);
    d.y1 = pos(rng);
    d.x2 = d.x1 + sz(rng);
    d.y2 = d.y1 + sz(rng);
    d.score = sc(rng);
    d.class_id = cls(rng);
    dets.push_back(d);
  }
  auto got = nms(dets, 0.4f, 100);
  auto want = nms_reference(dets, 0.4f, 100);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].score == want[i].score);
    CHECK(got[i].x1 == want[i].x1);
  }
}

TEST_CASE("analytic mode: planted object decodes to its box") {
  SequenceSpec spec;
  spec.num_frames = 1;
  spec.height = 128;
  spec.width = 128;
  spec.seed = 9;
  spec.objects.push_back({40, 48, 80, 88, 0, 0, 1.0f, 0.9f, 1});
  Sequence seq = generate(spec);

  DetectorConfig cfg;
  cfg.input_h = 128;
  cfg.input_w = 128;
  cfg.strides = {8, 16, 32};
  cfg.channels = 16;
  cfg.weight_mode = WeightMode::Analytic;
  Detector det(cfg);
  auto dets = det.detect_frame(seq.frames[0], det.all_levels());
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_id == 1);
  CHECK(dets[0].level_index == 1);  // 40 px object: owned by the stride-16 level
  CHECK(std::abs(dets[0].x1 - 40.0f) <= 1.0f);
  CHECK(std::abs(dets[0].y1 - 48.0f) <= 1.0f);
  CHECK(std::abs(dets[0].x2 - 80.0f) <= 1.0f);
  CHECK(std::abs(dets[0].y2 - 88.0f) <= 1.0f);
  CHECK(dets[0].score > 0.5f);
}

TEST_CASE("analytic heatmap mode: one peak per planted object") {
  SequenceSpec spec;
  spec.num_frames = 1;
  spec.height = 128;
  spec.width = 128;
  spec.seed = 10;
  spec.objects.push_back({16, 16, 48, 40, 0, 0, 1.0f, 0.8f, 2});
  spec.objects.push_back({72, 72, 112, 120, 0, 0, 1.0f, 0.9f, 0});
  Sequence seq = generate(spec);

  DetectorConfig cfg;
  cfg.input_h = 128;
  cfg.input_w = 128;
  cfg.strides = {4};
  cfg.channels = 16;
  cfg.weight_mode = WeightMode::Analytic;
  cfg.decode_kind = DecodeKind::HeatmapPeak;
  Detector det(cfg);
  auto dets = det.detect_frame(seq.frames[0], det.all_levels());
  REQUIRE(dets.size() == 2);
  EvalResult ev = evaluate({dets}, seq.truth);
  CHECK(ev.recall == doctest::Approx(1.0));
  CHECK(ev.precision == doctest::Approx(1.0));
}

TEST_CASE("partial runs equal the full run restricted to active levels") {
  Detector det(small_config());
  Tensor img = noise_image(64, 64, 11);
  FeaturePyramid p = det.build_pyramid(img);
  auto full = det.run_heads(p, {0, 1, 2});
  std::vector<Detection> full_candidates = det.decode_all(full);

  const std::set<int> subset{1, 2};
  auto partial = det.run_heads(p, subset);
  std::vector<Detection> partial_candidates = det.decode_all(partial);

  std::vector<Detection> filtered;
  for (const auto& d : full_candidates)
    if (subset.count(d.level_index)) filtered.push_back(d);
  REQUIRE(partial_candidates.size() == filtered.size());
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    CHECK(partial_candidates[i].score == filtered[i].score);
    CHECK(partial_candidates[i].x1 == filtered[i].x1);
    CHECK(partial_candidates[i].level_index == filtered[i].level_index);
  }
}

TEST_CASE("config validation rejects bad values") {
  DetectorConfig cfg = small_config();
  cfg.strides = {8, 32};  // must double
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.nms_iou = 1.5f;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.num_classes = 9;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
