#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "vod/cost.hpp"
#include "vod/tensor.hpp"

namespace vod {

enum class WeightMode { SeededRandom, Analytic };
enum class DecodeKind { CenterDistance, HeatmapPeak };

struct DetectorConfig {
  int input_h = 128;
  int input_w = 128;
  std::vector<int> strides{8, 16, 32};
  int channels = 64;
  int head_depth = 2;
  int num_classes = 3;
  float score_threshold = 0.05f;   // emission floor
  float validate_threshold = 0.5f; // boxes above this are temporal priors
  float nms_iou = 0.5f;
  int top_k = 100;
  WeightMode weight_mode = WeightMode::SeededRandom;
  DecodeKind decode_kind = DecodeKind::CenterDistance;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
  int num_levels() const { return static_cast<int>(strides.size()); }
  int level_h(int i) const { return (input_h + strides[i] - 1) / strides[i]; }
  int level_w(int i) const { return (input_w + strides[i] - 1) / strides[i]; }
  // Upper bound on max(w,h) of objects a level is responsible for; last level unbounded.
  float level_size_bound(int i) const;
};

struct PyramidLevel {
  int stride = 0;
  Tensor features;  // [C, H_l, W_l]
};

struct FeaturePyramid {
  std::vector<PyramidLevel> levels;
  int frame_index = 0;
};

struct Detection {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  float score = 0;
  int class_id = 0;
  int level_index = 0;
};

float box_iou(const Detection& a, const Detection& b);

// Greedy score-descending suppression, class-aware, truncated to top_k.
std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold, int top_k);

struct RawMaps {
  Tensor cls;  // [num_classes, H, W] logits (heatmap logits in peak mode)
  Tensor reg;  // [4, H, W]: distances l,t,r,b (log, stride units) or w,h,offx,offy
  Tensor ctr;  // [1, H, W] centerness logits
};

struct DetectorWeights {
  std::vector<Tensor> stem;                // stride-2 convs down to the first level
  std::vector<std::vector<Tensor>> downs;  // per extra level, stride-2 convs
  std::vector<Tensor> laterals;            // 1x1 projections to `channels`
  std::vector<Tensor> cls_branch, reg_branch;
  Tensor cls_pred, reg_pred, ctr_pred;

  static DetectorWeights seeded(const DetectorConfig& cfg);
  std::vector<std::pair<std::string, const Tensor*>> named() const;
};

using AggregationHook = std::function<void(FeaturePyramid&)>;

class Detector {
public:
  explicit Detector(DetectorConfig cfg);
  Detector(DetectorConfig cfg, DetectorWeights weights);

  const DetectorConfig& config() const { return cfg_; }
  const DetectorWeights& weights() const { return weights_; }

  FeaturePyramid build_pyramid(const Tensor& image, CostAccumulator* acc = nullptr) const;

  // Raw maps for the requested levels only; skipped levels cost nothing.
  std::map<int, RawMaps> run_heads(const FeaturePyramid& pyramid, const std::set<int>& active,
                                   CostAccumulator* acc = nullptr) const;

  std::vector<Detection> decode_level(const RawMaps& raw, int level_index,
                                      float score_threshold) const;

  // Decoded candidates from every map in `heads`, before NMS.
  std::vector<Detection> decode_all(const std::map<int, RawMaps>& heads) const;

  // build_pyramid -> hook -> run_heads -> decode -> nms.
  std::vector<Detection> detect_frame(const Tensor& image, const std::set<int>& active,
                                      const AggregationHook& hook = nullptr,
                                      CostAccumulator* acc = nullptr) const;

  std::set<int> all_levels() const;

private:
  DetectorConfig cfg_;
  DetectorWeights weights_;

  FeaturePyramid build_pyramid_seeded(const Tensor& image, CostAccumulator* acc) const;
  FeaturePyramid build_pyramid_analytic(const Tensor& image) const;
  RawMaps head_seeded(const Tensor& features, CostAccumulator* acc, int level_index) const;
  RawMaps head_analytic(const Tensor& features, int level_index) const;
};

}  // namespace vod
