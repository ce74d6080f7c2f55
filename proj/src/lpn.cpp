#include "vod/lpn.hpp"

#include <algorithm>
#include <cmath>

namespace vod {

ValidatedBoxes validate(const std::vector<Detection>& dets, float threshold, int source_frame) {
  ValidatedBoxes out;
  out.source_frame = source_frame;
  for (const auto& d : dets)
    if (d.score > threshold) out.boxes.push_back(d);
  return out;
}

std::optional<Detection> adjust_box(const Detection& box, float r, int image_w, int image_h) {
  if (r <= 0.0f) throw ConfigError("adjustment ratio must be positive");
  const float cx = 0.5f * (box.x1 + box.x2), cy = 0.5f * (box.y1 + box.y2);
  const float hw = 0.5f * (box.x2 - box.x1) * r, hh = 0.5f * (box.y2 - box.y1) * r;
  Detection out = box;
  out.x1 = std::max(0.0f, cx - hw);
  out.y1 = std::max(0.0f, cy - hh);
  out.x2 = std::min(static_cast<float>(image_w), cx + hw);
  out.y2 = std::min(static_cast<float>(image_h), cy + hh);
  if (out.x2 <= out.x1 || out.y2 <= out.y1) return std::nullopt;
  return out;
}

std::int64_t ForegroundMaskSet::total_ones() const {
  std::int64_t n = 0;
  for (const auto& m : masks)
    for (std::size_t i = 0; i < m.size(); ++i) n += m[i] > 0.5f ? 1 : 0;
  return n;
}

ForegroundMaskSet build_masks(const ValidatedBoxes& vboxes, const DetectorConfig& cfg, float r,
                              const std::set<int>& levels) {
  ForegroundMaskSet out;
  out.ratio = r;
  out.source_frame = vboxes.source_frame;
  out.skip = vboxes.empty();

  std::vector<Detection> adjusted;
  for (const auto& b : vboxes.boxes)
    if (auto a = adjust_box(b, r, cfg.input_w, cfg.input_h)) adjusted.push_back(*a);
  if (adjusted.empty()) out.skip = true;

  for (int li = 0; li < cfg.num_levels(); ++li) {
    const int s = cfg.strides[li];
    Tensor mask({1, cfg.level_h(li), cfg.level_w(li)});
    if (!out.skip && levels.count(li)) {
      for (int y = 0; y < mask.dim(1); ++y) {
        for (int x = 0; x < mask.dim(2); ++x) {
          const float px = (x + 0.5f) * s, py = (y + 0.5f) * s;
          for (const auto& b : adjusted) {
            if (px >= b.x1 && px <= b.x2 && py >= b.y1 && py <= b.y2) {
              mask.at(0, y, x) = 1.0f;
              break;
            }
          }
        }
      }
    }
    out.masks.push_back(std::move(mask));
  }
  return out;
}

ForegroundMaskSet build_masks(const ValidatedBoxes& vboxes, const DetectorConfig& cfg, float r) {
  std::set<int> all;
  for (int i = 0; i < cfg.num_levels(); ++i) all.insert(i);
  return build_masks(vboxes, cfg, r, all);
}

QuerySet select_queries_level(const FeaturePyramid& pyramid, const ForegroundMaskSet& masks,
                              int level) {
  const Tensor& f = pyramid.levels[level].features;
  const Tensor& m = masks.masks[level];
  if (m.dim(1) != f.dim(1) || m.dim(2) != f.dim(2))
    throw ConfigError("mask geometry does not match pyramid level");
  const int c = f.dim(0);
  std::vector<CellCoord> coords;
  for (int y = 0; y < m.dim(1); ++y)
    for (int x = 0; x < m.dim(2); ++x)
      if (m.at(0, y, x) > 0.5f) coords.push_back({level, x, y});
  QuerySet q;
  q.coords = coords;
  if (coords.empty()) {
    q.features = Tensor();
    return q;
  }
  Tensor feats({static_cast<int>(coords.size()), c});
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (int ch = 0; ch < c; ++ch) feats.at(static_cast<int>(i), ch) = f.at(ch, coords[i].y, coords[i].x);
  q.features = std::move(feats);
  return q;
}

QuerySet select_queries(const FeaturePyramid& pyramid, const ForegroundMaskSet& masks) {
  std::vector<CellCoord> coords;
  std::vector<float> rows;
  int c = 0;
  for (std::size_t li = 0; li < pyramid.levels.size(); ++li) {
    QuerySet q = select_queries_level(pyramid, masks, static_cast<int>(li));
    if (q.count() == 0) continue;
    c = q.features.dim(1);
    coords.insert(coords.end(), q.coords.begin(), q.coords.end());
    rows.insert(rows.end(), q.features.values().begin(), q.features.values().end());
  }
  QuerySet out;
  out.coords = std::move(coords);
  out.features = out.coords.empty()
                     ? Tensor()
                     : Tensor({static_cast<int>(out.coords.size()), c}, std::move(rows));
  return out;
}

void ReferenceBank::observe(ReferenceEntry entry) {
  ++seen_;
  if (static_cast<int>(entries_.size()) < capacity_) {
    entries_.push_back(std::move(entry));
    return;
  }
  const std::uint64_t j = rng_() % seen_;
  if (j < static_cast<std::uint64_t>(capacity_)) entries_[j] = std::move(entry);
}

void ReferenceBank::clear() {
  entries_.clear();
  seen_ = 0;
}

KeySet build_keys_level(const std::vector<ReferenceEntry>& entries, const DetectorConfig& cfg,
                        float r, int level) {
  std::vector<KeyOrigin> origins;
  std::vector<float> rows;
  int c = 0;
  for (const auto& e : entries) {
    if (e.vboxes.empty()) continue;
    ForegroundMaskSet mask = build_masks(e.vboxes, cfg, r, {level});
    if (mask.skip) continue;
    const Tensor& f = e.pyramid.levels[level].features;
    const Tensor& m = mask.masks[level];
    c = f.dim(0);
    for (int y = 0; y < m.dim(1); ++y) {
      for (int x = 0; x < m.dim(2); ++x) {
        if (m.at(0, y, x) <= 0.5f) continue;
        origins.push_back({e.frame_index, level, x, y});
        for (int ch = 0; ch < c; ++ch) rows.push_back(f.at(ch, y, x));
      }
    }
  }
  KeySet out;
  out.provenance = std::move(origins);
  out.features = out.provenance.empty()
                     ? Tensor()
                     : Tensor({static_cast<int>(out.provenance.size()), c}, std::move(rows));
  return out;
}

std::vector<KeySet> build_keys(const std::vector<ReferenceEntry>& entries,
                               const DetectorConfig& cfg, float r) {
  std::vector<KeySet> out;
  for (int li = 0; li < cfg.num_levels(); ++li)
    out.push_back(build_keys_level(entries, cfg, r, li));
  return out;
}

AggregationStats partial_aggregate(FeaturePyramid& pyramid, const ForegroundMaskSet& masks,
                                   const std::vector<ReferenceEntry>& bank,
                                   const DetectorConfig& cfg, float r,
                                   const AttentionParams& params) {
  AggregationStats stats;
  if (masks.skip || bank.empty()) return stats;
  for (std::size_t li = 0; li < pyramid.levels.size(); ++li) {
    QuerySet q = select_queries_level(pyramid, masks, static_cast<int>(li));
    if (q.count() == 0) continue;
    KeySet k = build_keys_level(bank, cfg, r, static_cast<int>(li));
    if (k.count() == 0) continue;
    auto enhanced = aggregate(q, k, params);
    if (!enhanced) continue;
    Tensor& f = pyramid.levels[li].features;
    const int c = f.dim(0);
    for (int i = 0; i < q.count(); ++i)
      for (int ch = 0; ch < c; ++ch) f.at(ch, q.coords[i].y, q.coords[i].x) = enhanced->at(i, ch);
    stats.aggregated = true;
    stats.n_q += q.count();
    stats.n_k += k.count();
    stats.mac_count += attention_op_count(q.count(), k.count(), c);
  }
  return stats;
}

}  // namespace vod
