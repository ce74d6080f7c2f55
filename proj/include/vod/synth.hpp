#pragma once

#include <cstdint>
#include <vector>

#include "vod/detector.hpp"
#include "vod/lpn.hpp"

namespace vod {

struct ObjectSpec {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // frame-0 box, pixels
  float vx = 0, vy = 0;                  // px/frame
  float growth = 1.0f;                   // per-frame width/height factor
  float intensity = 1.0f;                // in [0.5, 1]
  int class_id = 0;
};

struct SequenceSpec {
  int num_frames = 30;
  int height = 128, width = 128;
  std::vector<ObjectSpec> objects;
  float noise = 0.05f;  // background uniform noise amplitude, < 0.25
  std::uint64_t seed = 0;

  void validate() const;  // every object stays >= 8x8 and inside the image
};

struct GroundTruth {
  std::vector<std::vector<Detection>> frames;  // score 1.0, level_index -1
};

struct Sequence {
  std::vector<Tensor> frames;  // [3,H,W] each
  GroundTruth truth;
};

// Ground-truth box of one object at frame t (center drift + size growth).
Detection object_box_at(const ObjectSpec& obj, int t);

// Objects rendered as solid rectangles over uniform background noise.
// Channel 0 carries intensity, channel 1 the class code (id+1)/8.
// Deterministic per (spec, seed).
Sequence generate(const SequenceSpec& spec);

struct EvalResult {
  double recall = 0.0;
  double precision = 0.0;
  int matched = 0;
  int total_truth = 0;
  int total_dets = 0;
  std::vector<int> per_frame_matches;
};

// Greedy per-frame one-to-one matching at the given IoU threshold; class-aware.
EvalResult evaluate(const std::vector<std::vector<Detection>>& dets, const GroundTruth& truth,
                    float iou_threshold = 0.5f);

// Fraction of ground-truth box centers that land on a mask-1 cell at any level.
double mask_coverage(const std::vector<Detection>& truth_boxes, const ForegroundMaskSet& masks,
                     const DetectorConfig& cfg);

}  // namespace vod
