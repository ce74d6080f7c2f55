#include <doctest.h>

#include <cmath>

#include "vod/synth.hpp"

using namespace vod;

namespace {

SequenceSpec basic_spec() {
  SequenceSpec spec;
  spec.num_frames = 4;
  spec.height = 96;
  spec.width = 96;
  spec.noise = 0.1f;
  spec.seed = 21;
  spec.objects.push_back({16, 16, 48, 48, 2, 1, 1.0f, 0.8f, 3});
  return spec;
}

}  // namespace

TEST_CASE("object_box_at: drift and growth") {
  ObjectSpec obj{10, 20, 30, 40, 2, -1, 1.0f, 0.9f, 0};
  Detection d0 = object_box_at(obj, 0);
  CHECK(d0.x1 == doctest::Approx(10.0f));
  CHECK(d0.y2 == doctest::Approx(40.0f));
  Detection d3 = object_box_at(obj, 3);
  CHECK(d3.x1 == doctest::Approx(16.0f));
  CHECK(d3.y1 == doctest::Approx(17.0f));
  CHECK(d3.x2 - d3.x1 == doctest::Approx(20.0f));

  ObjectSpec grow{40, 40, 60, 60, 0, 0, 1.1f, 0.9f, 0};
  Detection g2 = object_box_at(grow, 2);
  CHECK(g2.x2 - g2.x1 == doctest::Approx(20.0f * 1.1f * 1.1f));
  CHECK((g2.x1 + g2.x2) / 2 == doctest::Approx(50.0f));
}

TEST_CASE("generate: shapes, truth records, and class codes") {
  SequenceSpec spec = basic_spec();
  Sequence seq = generate(spec);
  REQUIRE(seq.frames.size() == 4);
  REQUIRE(seq.truth.frames.size() == 4);
  CHECK(seq.frames[0].shape() == std::vector<int>{3, 96, 96});
  REQUIRE(seq.truth.frames[0].size() == 1);
  CHECK(seq.truth.frames[0][0].class_id == 3);
  CHECK(seq.truth.frames[0][0].x1 == doctest::Approx(16.0f));
  CHECK(seq.truth.frames[1][0].x1 == doctest::Approx(18.0f));

  // interior pixel of the rectangle carries intensity and the class code
  CHECK(seq.frames[0].at(0, 30, 30) == doctest::Approx(0.8f));
  CHECK(seq.frames[0].at(1, 30, 30) == doctest::Approx((3 + 1) / 8.0f));
  // background stays within the noise band on the class channel
  CHECK(seq.frames[0].at(1, 5, 5) <= 0.25f);
}

TEST_CASE("generate is deterministic per seed and differs across seeds") {
  SequenceSpec spec = basic_spec();
  Sequence a = generate(spec), b = generate(spec);
  for (int t = 0; t < spec.num_frames; ++t)
    CHECK(a.frames[t].values() == b.frames[t].values());

  spec.seed = 22;
  Sequence c = generate(spec);
  CHECK(a.frames[0].values() != c.frames[0].values());
}

TEST_CASE("spec validation rejects out-of-range parameters") {
  SequenceSpec spec = basic_spec();
  spec.noise = 0.4f;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = basic_spec();
  spec.objects[0].intensity = 0.3f;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = basic_spec();
  spec.objects[0].vx = 20;  // walks off the right edge before the last frame
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = basic_spec();
  spec.objects[0].x2 = spec.objects[0].x1 + 4;  // below the 8px minimum
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = basic_spec();
  spec.objects[0].class_id = 7;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("evaluate: perfect, missed, and class-mismatched detections") {
  GroundTruth truth;
  Detection gt;
  gt.x1 = 10;
  gt.y1 = 10;
  gt.x2 = 40;
  gt.y2 = 40;
  gt.class_id = 2;
  gt.score = 1.0f;
  truth.frames.push_back({gt});

  Detection hit = gt;
  hit.score = 0.9f;
  EvalResult perfect = evaluate({{hit}}, truth);
  CHECK(perfect.recall == doctest::Approx(1.0));
  CHECK(perfect.precision == doctest::Approx(1.0));
  CHECK(perfect.matched == 1);

  EvalResult missed = evaluate({{}}, truth);
  CHECK(missed.recall == doctest::Approx(0.0));

  Detection wrong_class = hit;
  wrong_class.class_id = 1;
  EvalResult mismatch = evaluate({{wrong_class}}, truth);
  CHECK(mismatch.recall == doctest::Approx(0.0));
  CHECK(mismatch.precision == doctest::Approx(0.0));

  Detection offset = hit;
  offset.x1 += 25;  // IoU below 0.5
  offset.x2 += 25;
  CHECK(evaluate({{offset}}, truth).matched == 0);
}

TEST_CASE("evaluate matches greedily one-to-one") {
  GroundTruth truth;
  Detection gt;
  gt.x1 = 0;
  gt.y1 = 0;
  gt.x2 = 20;
  gt.y2 = 20;
  gt.class_id = 0;
  truth.frames.push_back({gt});

  Detection d1 = gt;
  d1.score = 0.9f;
  Detection d2 = gt;
  d2.score = 0.8f;
  EvalResult r = evaluate({{d1, d2}}, truth);
  CHECK(r.matched == 1);  // the duplicate cannot claim the same truth box
  CHECK(r.precision == doctest::Approx(0.5));
}

TEST_CASE("mask_coverage counts truth centers on mask-1 cells") {
  DetectorConfig cfg;
  cfg.input_h = 64;
  cfg.input_w = 64;
  cfg.strides = {8, 16, 32};
  cfg.channels = 8;

  // keep the box away from the stride-32 cell that owns the image corner
  Detection gt;
  gt.x1 = 40;
  gt.y1 = 40;
  gt.x2 = 60;
  gt.y2 = 60;
  ValidatedBoxes v = validate({Detection{40, 40, 60, 60, 0.9f, 0, 0}}, 0.5f, 0);
  ForegroundMaskSet m = build_masks(v, cfg, 1.0f, {0, 1, 2});
  CHECK(mask_coverage({gt}, m, cfg) == doctest::Approx(1.0));

  Detection far;
  far.x1 = 0;
  far.y1 = 0;
  far.x2 = 10;
  far.y2 = 10;
  CHECK(mask_coverage({far}, m, cfg) == doctest::Approx(0.0));
  CHECK(mask_coverage({gt, far}, m, cfg) == doctest::Approx(0.5));
}
