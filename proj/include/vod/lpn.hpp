#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "vod/attention.hpp"
#include "vod/detector.hpp"

namespace vod {

// Detections whose classification score is strictly greater than the
// validation threshold; the temporal prior set.
struct ValidatedBoxes {
  std::vector<Detection> boxes;
  int source_frame = -1;
  bool empty() const { return boxes.empty(); }
};

ValidatedBoxes validate(const std::vector<Detection>& dets, float threshold = 0.5f,
                        int source_frame = -1);

// Width/height scaled by r about the box center, clamped to image bounds.
// Returns nullopt when the clamped box has no area.
std::optional<Detection> adjust_box(const Detection& box, float r, int image_w, int image_h);

struct ForegroundMaskSet {
  std::vector<Tensor> masks;  // one [1,H_l,W_l] binary mask per level
  float ratio = 1.0f;
  int source_frame = -1;
  bool skip = false;  // no validated boxes: aggregation is skipped

  std::int64_t total_ones() const;
};

// A level cell is foreground iff its pixel center ((x+0.5)s, (y+0.5)s) lies
// inside (inclusive) any r-adjusted validated box. Only levels listed in
// `levels` are populated; others stay all-zero.
ForegroundMaskSet build_masks(const ValidatedBoxes& vboxes, const DetectorConfig& cfg, float r,
                              const std::set<int>& levels);
ForegroundMaskSet build_masks(const ValidatedBoxes& vboxes, const DetectorConfig& cfg, float r);

// Features of all mask-1 cells of one level, coords recorded in row-major order.
QuerySet select_queries_level(const FeaturePyramid& pyramid, const ForegroundMaskSet& masks,
                              int level);
// All levels concatenated.
QuerySet select_queries(const FeaturePyramid& pyramid, const ForegroundMaskSet& masks);

struct ReferenceEntry {
  int frame_index = -1;
  FeaturePyramid pyramid;
  ValidatedBoxes vboxes;
};

// Uniform random sample of past frames (reservoir), sequential single writer.
class ReferenceBank {
public:
  ReferenceBank(int capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {}

  void observe(ReferenceEntry entry);
  const std::vector<ReferenceEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  void clear();

private:
  int capacity_;
  std::uint64_t seen_ = 0;
  std::mt19937_64 rng_;
  std::vector<ReferenceEntry> entries_;
};

// Keys for one level: mask-selected cells within each reference entry's
// r-adjusted validated boxes, with provenance.
KeySet build_keys_level(const std::vector<ReferenceEntry>& entries, const DetectorConfig& cfg,
                        float r, int level);
std::vector<KeySet> build_keys(const std::vector<ReferenceEntry>& entries,
                               const DetectorConfig& cfg, float r);

struct AggregationStats {
  bool aggregated = false;
  std::int64_t n_q = 0;
  std::int64_t n_k = 0;
  std::uint64_t mac_count = 0;
};

// Replaces mask-1 cells with attention-enhanced features, per level; mask-0
// cells are left bitwise unchanged. Returns what was done and at what cost.
AggregationStats partial_aggregate(FeaturePyramid& pyramid, const ForegroundMaskSet& masks,
                                   const std::vector<ReferenceEntry>& bank,
                                   const DetectorConfig& cfg, float r,
                                   const AttentionParams& params);

}  // namespace vod
