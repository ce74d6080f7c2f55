#include "vod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vod {

Detection object_box_at(const ObjectSpec& obj, int t) {
  const float cx = 0.5f * (obj.x1 + obj.x2) + obj.vx * t;
  const float cy = 0.5f * (obj.y1 + obj.y2) + obj.vy * t;
  const float g = std::pow(obj.growth, static_cast<float>(t));
  const float hw = 0.5f * (obj.x2 - obj.x1) * g;
  const float hh = 0.5f * (obj.y2 - obj.y1) * g;
  Detection d;
  d.x1 = cx - hw;
  d.y1 = cy - hh;
  d.x2 = cx + hw;
  d.y2 = cy + hh;
  d.score = 1.0f;
  d.class_id = obj.class_id;
  d.level_index = -1;
  return d;
}

void SequenceSpec::validate() const {
  if (num_frames < 1) throw ConfigError("sequence needs at least one frame");
  if (height < 32 || width < 32) throw ConfigError("sequence image must be at least 32x32");
  if (noise < 0.0f || noise > 0.25f) throw ConfigError("background noise must be in [0, 0.25]");
  for (const auto& obj : objects) {
    if (obj.intensity < 0.5f || obj.intensity > 1.0f)
      throw ConfigError("object intensity must be in [0.5, 1]");
    if (obj.class_id < 0 || obj.class_id > 6) throw ConfigError("class_id must be in [0, 6]");
    if (obj.growth <= 0.0f) throw ConfigError("growth factor must be positive");
    for (int t = 0; t < num_frames; ++t) {
      const Detection b = object_box_at(obj, t);
      if (b.x2 - b.x1 < 8.0f || b.y2 - b.y1 < 8.0f)
        throw ConfigError("object shrinks below 8x8 at frame " + std::to_string(t));
      if (b.x1 < 0.0f || b.y1 < 0.0f || b.x2 > width || b.y2 > height)
        throw ConfigError("object leaves the image at frame " + std::to_string(t));
    }
  }
}

Sequence generate(const SequenceSpec& spec) {
  spec.validate();
  Sequence seq;
  for (int t = 0; t < spec.num_frames; ++t) {
    std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<float> noise(0.0f, spec.noise);
    Tensor img({3, spec.height, spec.width});
    if (spec.noise > 0.0f)
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) img.at(0, y, x) = noise(rng);

    std::vector<Detection> gt;
    for (const auto& obj : spec.objects) {
      const Detection b = object_box_at(obj, t);
      const int ix1 = std::max(0, static_cast<int>(std::lround(b.x1)));
      const int iy1 = std::max(0, static_cast<int>(std::lround(b.y1)));
      const int ix2 = std::min(spec.width, static_cast<int>(std::lround(b.x2)));
      const int iy2 = std::min(spec.height, static_cast<int>(std::lround(b.y2)));
      const float code = (obj.class_id + 1) / 8.0f;
      for (int y = iy1; y < iy2; ++y) {
        for (int x = ix1; x < ix2; ++x) {
          img.at(0, y, x) = obj.intensity;
          img.at(1, y, x) = code;
          img.at(2, y, x) = obj.intensity;
        }
      }
      gt.push_back(b);
    }
    seq.frames.push_back(std::move(img));
    seq.truth.frames.push_back(std::move(gt));
  }
  return seq;
}

EvalResult evaluate(const std::vector<std::vector<Detection>>& dets, const GroundTruth& truth,
                    float iou_threshold) {
  EvalResult res;
  const std::size_t n = std::min(dets.size(), truth.frames.size());
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<Detection> sorted = dets[t];
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<bool> used(truth.frames[t].size(), false);
    int matches = 0;
    for (const auto& d : sorted) {
      int best = -1;
      float best_iou = iou_threshold;
      for (std::size_t g = 0; g < truth.frames[t].size(); ++g) {
        if (used[g] || truth.frames[t][g].class_id != d.class_id) continue;
        const float v = box_iou(d, truth.frames[t][g]);
        if (v >= best_iou) {
          best_iou = v;
          best = static_cast<int>(g);
        }
      }
      if (best >= 0) {
        used[best] = true;
        ++matches;
      }
    }
    res.per_frame_matches.push_back(matches);
    res.matched += matches;
    res.total_truth += static_cast<int>(truth.frames[t].size());
    res.total_dets += static_cast<int>(dets[t].size());
  }
  res.recall = res.total_truth ? static_cast<double>(res.matched) / res.total_truth : 0.0;
  res.precision = res.total_dets ? static_cast<double>(res.matched) / res.total_dets : 0.0;
  return res;
}

double mask_coverage(const std::vector<Detection>& truth_boxes, const ForegroundMaskSet& masks,
                     const DetectorConfig& cfg) {
  if (truth_boxes.empty()) return 1.0;
  int covered = 0;
  for (const auto& b : truth_boxes) {
    const float cx = 0.5f * (b.x1 + b.x2), cy = 0.5f * (b.y1 + b.y2);
    bool hit = false;
    for (int li = 0; li < cfg.num_levels() && !hit; ++li) {
      const int s = cfg.strides[li];
      const int x = std::min(static_cast<int>(cx / s), cfg.level_w(li) - 1);
      const int y = std::min(static_cast<int>(cy / s), cfg.level_h(li) - 1);
      hit = masks.masks[li].at(0, y, x) > 0.5f;
    }
    if (hit) ++covered;
  }
  return static_cast<double>(covered) / truth_boxes.size();
}

}  // namespace vod
