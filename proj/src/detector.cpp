#include "vod/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace vod {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

Tensor he_conv(std::mt19937_64& rng, int c_out, int c_in, int k) {
  const float std_dev = std::sqrt(2.0f / static_cast<float>(c_in * k * k));
  std::normal_distribution<float> dist(0.0f, std_dev);
  Tensor t({c_out, c_in, k, k});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

std::uint64_t conv_macs(const Tensor& out, const Tensor& w) {
  return static_cast<std::uint64_t>(out.size()) * w.dim(1) * w.dim(2) * w.dim(3);
}

// Analytic-mode feature layout. Channel 0 carries object intensity, channel 1
// a class code ((id+1)/8), channels 2..5 the decode targets for the level's
// decode kind, channel 6 a center-cell marker (peak mode only).
constexpr float kInsideScan = 0.35f;  // on the raw image
constexpr float kInsideHead = 0.40f;  // on (possibly enhanced) features
constexpr float kOnLogit = 4.0f;
constexpr float kOffLogit = -10.0f;

bool img_inside(const Tensor& img, int x, int y) { return img.at(0, y, x) > kInsideScan; }

}  // namespace

void DetectorConfig::validate() const {
  if (input_h < 8 || input_w < 8) throw ConfigError("input size too small");
  if (strides.empty()) throw ConfigError("at least one stride required");
  for (std::size_t i = 0; i < strides.size(); ++i) {
    if (!is_pow2(strides[i]) || strides[i] < 2)
      throw ConfigError("strides must be powers of two >= 2");
    if (i > 0 && strides[i] != 2 * strides[i - 1])
      throw ConfigError("consecutive strides must double");
  }
  if (channels < 8) throw ConfigError("channels must be >= 8");
  if (head_depth < 1) throw ConfigError("head_depth must be >= 1");
  if (num_classes < 1 || num_classes > 7) throw ConfigError("num_classes must be in [1,7]");
  if (score_threshold < 0.0f || score_threshold > 1.0f)
    throw ConfigError("score_threshold must be in [0,1]");
  if (nms_iou <= 0.0f || nms_iou >= 1.0f) throw ConfigError("nms_iou must be in (0,1)");
  if (top_k < 1) throw ConfigError("top_k must be positive");
  if (decode_kind == DecodeKind::HeatmapPeak && strides.size() != 1)
    throw ConfigError("heatmap decode requires a single level");
}

float DetectorConfig::level_size_bound(int i) const {
  if (i == num_levels() - 1) return std::numeric_limits<float>::infinity();
  return 4.0f * static_cast<float>(strides[i]);
}

float box_iou(const Detection& a, const Detection& b) {
  const float ix = std::max(0.0f, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const float iy = std::max(0.0f, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const float inter = ix * iy;
  const float uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return uni > 0.0f ? inter / uni : 0.0f;
}

std::vector<Detection> nms(std::vector<Detection> dets, float iou_threshold, int top_k) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    if (a.x1 != b.x1) return a.x1 < b.x1;
    return a.y1 < b.y1;
  });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.class_id == d.class_id && box_iou(k, d) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(d);
      if (static_cast<int>(kept.size()) >= top_k) break;
    }
  }
  return kept;
}

DetectorWeights DetectorWeights::seeded(const DetectorConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  DetectorWeights w;
  const int cap = cfg.channels;
  int width = 3;
  int halvings = 0;
  for (int s = cfg.strides[0]; s > 1; s /= 2) ++halvings;
  for (int j = 0; j < halvings; ++j) {
    const int next = std::min(cap, 16 << j);
    w.stem.push_back(he_conv(rng, next, width, 3));
    width = next;
  }
  std::vector<int> level_width{width};
  w.downs.resize(cfg.strides.size());
  for (std::size_t i = 1; i < cfg.strides.size(); ++i) {
    const int next = std::min(cap, width * 2);
    w.downs[i].push_back(he_conv(rng, next, width, 3));
    width = next;
    level_width.push_back(width);
  }
  for (std::size_t i = 0; i < cfg.strides.size(); ++i)
    w.laterals.push_back(he_conv(rng, cap, level_width[i], 1));
  for (int d = 0; d < cfg.head_depth; ++d) w.cls_branch.push_back(he_conv(rng, cap, cap, 3));
  for (int d = 0; d < cfg.head_depth; ++d) w.reg_branch.push_back(he_conv(rng, cap, cap, 3));
  w.cls_pred = he_conv(rng, cfg.num_classes, cap, 3);
  w.reg_pred = he_conv(rng, 4, cap, 3);
  w.ctr_pred = he_conv(rng, 1, cap, 3);
  return w;
}

std::vector<std::pair<std::string, const Tensor*>> DetectorWeights::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (std::size_t i = 0; i < stem.size(); ++i) out.emplace_back("stem." + std::to_string(i), &stem[i]);
  for (std::size_t i = 0; i < downs.size(); ++i)
    for (std::size_t j = 0; j < downs[i].size(); ++j)
      out.emplace_back("downs." + std::to_string(i) + "." + std::to_string(j), &downs[i][j]);
  for (std::size_t i = 0; i < laterals.size(); ++i)
    out.emplace_back("lateral." + std::to_string(i), &laterals[i]);
  for (std::size_t i = 0; i < cls_branch.size(); ++i)
    out.emplace_back("cls_branch." + std::to_string(i), &cls_branch[i]);
  for (std::size_t i = 0; i < reg_branch.size(); ++i)
    out.emplace_back("reg_branch." + std::to_string(i), &reg_branch[i]);
  out.emplace_back("cls_pred", &cls_pred);
  out.emplace_back("reg_pred", &reg_pred);
  out.emplace_back("ctr_pred", &ctr_pred);
  return out;
}

Detector::Detector(DetectorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.weight_mode == WeightMode::SeededRandom) weights_ = DetectorWeights::seeded(cfg_);
}

Detector::Detector(DetectorConfig cfg, DetectorWeights weights)
    : cfg_(std::move(cfg)), weights_(std::move(weights)) {
  cfg_.validate();
}

std::set<int> Detector::all_levels() const {
  std::set<int> s;
  for (int i = 0; i < cfg_.num_levels(); ++i) s.insert(i);
  return s;
}

FeaturePyramid Detector::build_pyramid(const Tensor& image, CostAccumulator* acc) const {
  if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != cfg_.input_h ||
      image.dim(2) != cfg_.input_w)
    throw ConfigError("image shape " + image.shape_str() + " does not match configured input " +
                      std::to_string(cfg_.input_h) + "x" + std::to_string(cfg_.input_w));
  if (cfg_.weight_mode == WeightMode::Analytic) {
    const auto t0 = Clock::now();
    FeaturePyramid p = build_pyramid_analytic(image);
    if (acc) acc->add("backbone", ms_since(t0), 0, 0);
    return p;
  }
  return build_pyramid_seeded(image, acc);
}

FeaturePyramid Detector::build_pyramid_seeded(const Tensor& image, CostAccumulator* acc) const {
  auto t0 = Clock::now();
  std::uint64_t macs = 0, bytes = 0;
  Tensor cur = image;
  for (const auto& w : weights_.stem) {
    cur = conv2d(cur, w, 2, 1);
    relu_inplace(cur);
    macs += conv_macs(cur, w);
    bytes = std::max<std::uint64_t>(bytes, cur.size() * sizeof(float));
  }
  std::vector<Tensor> backbone_maps;
  backbone_maps.push_back(cur);
  for (std::size_t i = 1; i < weights_.downs.size(); ++i) {
    for (const auto& w : weights_.downs[i]) {
      cur = conv2d(cur, w, 2, 1);
      relu_inplace(cur);
      macs += conv_macs(cur, w);
    }
    backbone_maps.push_back(cur);
  }
  if (acc) acc->add("backbone", ms_since(t0), macs, bytes);

  // Neck: 1x1 laterals plus top-down nearest-neighbour merge.
  t0 = Clock::now();
  macs = 0;
  const int n = cfg_.num_levels();
  std::vector<Tensor> merged(n);
  for (int i = n - 1; i >= 0; --i) {
    merged[i] = conv2d(backbone_maps[i], weights_.laterals[i], 1, 0);
    macs += conv_macs(merged[i], weights_.laterals[i]);
    if (i < n - 1) {
      Tensor up = upsample2x_nearest(merged[i + 1], merged[i].dim(1), merged[i].dim(2));
      add_inplace(merged[i], up);
    }
  }
  if (acc) {
    std::uint64_t nb = merged[0].size() * sizeof(float);
    acc->add("neck", ms_since(t0), macs, nb);
  }

  FeaturePyramid pyr;
  for (int i = 0; i < n; ++i) pyr.levels.push_back({cfg_.strides[i], std::move(merged[i])});
  return pyr;
}

FeaturePyramid Detector::build_pyramid_analytic(const Tensor& image) const {
  const int h = cfg_.input_h, w = cfg_.input_w;
  FeaturePyramid pyr;
  for (int li = 0; li < cfg_.num_levels(); ++li) {
    const int s = cfg_.strides[li];
    const int lh = cfg_.level_h(li), lw = cfg_.level_w(li);
    Tensor f({cfg_.channels, lh, lw});
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        const float cx = (x + 0.5f) * s, cy = (y + 0.5f) * s;
        const int px = std::min(static_cast<int>(cx), w - 1);
        const int py = std::min(static_cast<int>(cy), h - 1);
        if (!img_inside(image, px, py)) continue;
        int lx = px, rx = px, ty = py, by = py;
        while (lx - 1 >= 0 && img_inside(image, lx - 1, py)) --lx;
        while (rx + 1 < w && img_inside(image, rx + 1, py)) ++rx;
        while (ty - 1 >= 0 && img_inside(image, px, ty - 1)) --ty;
        while (by + 1 < h && img_inside(image, px, by + 1)) ++by;
        const float ox1 = lx, ox2 = rx + 1.0f, oy1 = ty, oy2 = by + 1.0f;
        f.at(0, y, x) = image.at(0, py, px);
        f.at(1, y, x) = image.at(1, py, px);
        const float eps = 1e-4f;
        if (cfg_.decode_kind == DecodeKind::CenterDistance) {
          f.at(2, y, x) = std::log(std::max((cx - ox1) / s, eps));
          f.at(3, y, x) = std::log(std::max((cy - oy1) / s, eps));
          f.at(4, y, x) = std::log(std::max((ox2 - cx) / s, eps));
          f.at(5, y, x) = std::log(std::max((oy2 - cy) / s, eps));
        } else {
          const float ocx = 0.5f * (ox1 + ox2), ocy = 0.5f * (oy1 + oy2);
          f.at(2, y, x) = std::log(std::max((ox2 - ox1) / s, eps));
          f.at(3, y, x) = std::log(std::max((oy2 - oy1) / s, eps));
          f.at(4, y, x) = ocx / s - (x + 0.5f);
          f.at(5, y, x) = ocy / s - (y + 0.5f);
          const bool center_cell =
              x == static_cast<int>(ocx / s) && y == static_cast<int>(ocy / s);
          f.at(6, y, x) = center_cell ? 1.0f : 0.0f;
        }
      }
    }
    pyr.levels.push_back({s, std::move(f)});
  }
  return pyr;
}

std::map<int, RawMaps> Detector::run_heads(const FeaturePyramid& pyramid,
                                           const std::set<int>& active,
                                           CostAccumulator* acc) const {
  std::map<int, RawMaps> out;
  for (int li : active) {
    if (li < 0 || li >= cfg_.num_levels()) throw ConfigError("active level out of range");
    const auto t0 = Clock::now();
    RawMaps raw = cfg_.weight_mode == WeightMode::Analytic
                      ? head_analytic(pyramid.levels[li].features, li)
                      : head_seeded(pyramid.levels[li].features, acc, li);
    if (acc && cfg_.weight_mode == WeightMode::Analytic)
      acc->add("head-level-" + std::to_string(li), ms_since(t0), 0, 0);
    out.emplace(li, std::move(raw));
  }
  return out;
}

RawMaps Detector::head_seeded(const Tensor& features, CostAccumulator* acc,
                              int level_index) const {
  const auto t0 = Clock::now();
  std::uint64_t macs = 0;
  Tensor cls_f = features;
  for (const auto& w : weights_.cls_branch) {
    cls_f = conv2d(cls_f, w, 1, 1);
    relu_inplace(cls_f);
    macs += conv_macs(cls_f, w);
  }
  Tensor reg_f = features;
  for (const auto& w : weights_.reg_branch) {
    reg_f = conv2d(reg_f, w, 1, 1);
    relu_inplace(reg_f);
    macs += conv_macs(reg_f, w);
  }
  RawMaps raw;
  raw.cls = conv2d(cls_f, weights_.cls_pred, 1, 1);
  raw.reg = conv2d(reg_f, weights_.reg_pred, 1, 1);
  raw.ctr = conv2d(reg_f, weights_.ctr_pred, 1, 1);
  macs += conv_macs(raw.cls, weights_.cls_pred) + conv_macs(raw.reg, weights_.reg_pred) +
          conv_macs(raw.ctr, weights_.ctr_pred);
  if (acc) {
    const std::uint64_t bytes = cls_f.size() * sizeof(float) * 2;
    acc->add("head-level-" + std::to_string(level_index), ms_since(t0), macs, bytes);
  }
  return raw;
}

RawMaps Detector::head_analytic(const Tensor& features, int level_index) const {
  const int lh = features.dim(1), lw = features.dim(2);
  RawMaps raw;
  raw.cls = Tensor::full({cfg_.num_classes, lh, lw}, kOffLogit);
  raw.reg = Tensor({4, lh, lw});
  raw.ctr = Tensor::full({1, lh, lw}, kOffLogit);
  const float s = static_cast<float>(cfg_.strides[level_index]);
  const float lower = level_index == 0 ? 0.0f : cfg_.level_size_bound(level_index - 1);
  const float upper = cfg_.level_size_bound(level_index);
  for (int y = 0; y < lh; ++y) {
    for (int x = 0; x < lw; ++x) {
      for (int ch = 0; ch < 4; ++ch) raw.reg.at(ch, y, x) = features.at(2 + ch, y, x);
      if (features.at(0, y, x) <= kInsideHead) continue;
      float max_dim;
      if (cfg_.decode_kind == DecodeKind::CenterDistance) {
        const float bw = (std::exp(features.at(2, y, x)) + std::exp(features.at(4, y, x))) * s;
        const float bh = (std::exp(features.at(3, y, x)) + std::exp(features.at(5, y, x))) * s;
        max_dim = std::max(bw, bh);
      } else {
        if (features.at(6, y, x) < 0.5f) continue;  // only the center cell peaks
        const float bw = std::exp(features.at(2, y, x)) * s;
        const float bh = std::exp(features.at(3, y, x)) * s;
        max_dim = std::max(bw, bh);
      }
      if (max_dim <= lower || max_dim > upper) continue;
      const int cid = std::clamp(
          static_cast<int>(std::lround(features.at(1, y, x) * 8.0f - 1.0f)), 0,
          cfg_.num_classes - 1);
      raw.cls.at(cid, y, x) = kOnLogit;
      raw.ctr.at(0, y, x) = kOnLogit;
    }
  }
  return raw;
}

std::vector<Detection> Detector::decode_level(const RawMaps& raw, int level_index,
                                              float score_threshold) const {
  const int lh = raw.cls.dim(1), lw = raw.cls.dim(2);
  const float s = static_cast<float>(cfg_.strides[level_index]);
  const float img_w = static_cast<float>(cfg_.input_w), img_h = static_cast<float>(cfg_.input_h);
  std::vector<Detection> out;
  auto dist = [](float v) { return std::exp(std::min(v, 8.0f)); };

  if (cfg_.decode_kind == DecodeKind::CenterDistance) {
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        int best = 0;
        for (int c = 1; c < cfg_.num_classes; ++c)
          if (raw.cls.at(c, y, x) > raw.cls.at(best, y, x)) best = c;
        const float score = sigmoid(raw.cls.at(best, y, x)) * sigmoid(raw.ctr.at(0, y, x));
        if (score <= score_threshold) continue;
        const float cx = (x + 0.5f) * s, cy = (y + 0.5f) * s;
        Detection d;
        d.x1 = std::max(0.0f, cx - dist(raw.reg.at(0, y, x)) * s);
        d.y1 = std::max(0.0f, cy - dist(raw.reg.at(1, y, x)) * s);
        d.x2 = std::min(img_w, cx + dist(raw.reg.at(2, y, x)) * s);
        d.y2 = std::min(img_h, cy + dist(raw.reg.at(3, y, x)) * s);
        d.score = score;
        d.class_id = best;
        d.level_index = level_index;
        if (d.x2 > d.x1 && d.y2 > d.y1) out.push_back(d);
      }
    }
    return out;
  }

  // Heatmap peaks: 3x3 local maxima per class.
  for (int c = 0; c < cfg_.num_classes; ++c) {
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        const float v = raw.cls.at(c, y, x);
        const float score = sigmoid(v) * sigmoid(raw.ctr.at(0, y, x));
        if (score <= score_threshold) continue;
        bool peak = true;
        for (int dy = -1; dy <= 1 && peak; ++dy)
          for (int dx = -1; dx <= 1 && peak; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int ny = y + dy, nx = x + dx;
            if (ny < 0 || ny >= lh || nx < 0 || nx >= lw) continue;
            if (raw.cls.at(c, ny, nx) > v) peak = false;
          }
        if (!peak) continue;
        const float bw = dist(raw.reg.at(0, y, x)) * s, bh = dist(raw.reg.at(1, y, x)) * s;
        const float cx = (x + 0.5f + raw.reg.at(2, y, x)) * s;
        const float cy = (y + 0.5f + raw.reg.at(3, y, x)) * s;
        Detection d;
        d.x1 = std::max(0.0f, cx - 0.5f * bw);
        d.y1 = std::max(0.0f, cy - 0.5f * bh);
        d.x2 = std::min(img_w, cx + 0.5f * bw);
        d.y2 = std::min(img_h, cy + 0.5f * bh);
        d.score = score;
        d.class_id = c;
        d.level_index = level_index;
        if (d.x2 > d.x1 && d.y2 > d.y1) out.push_back(d);
      }
    }
  }
  return out;
}

std::vector<Detection> Detector::decode_all(const std::map<int, RawMaps>& heads) const {
  std::vector<Detection> all;
  for (const auto& [li, raw] : heads) {
    auto dets = decode_level(raw, li, cfg_.score_threshold);
    all.insert(all.end(), dets.begin(), dets.end());
  }
  return all;
}

std::vector<Detection> Detector::detect_frame(const Tensor& image, const std::set<int>& active,
                                              const AggregationHook& hook,
                                              CostAccumulator* acc) const {
  FeaturePyramid pyr = build_pyramid(image, acc);
  if (hook) hook(pyr);
  auto heads = run_heads(pyr, active, acc);
  std::vector<Detection> all;
  for (const auto& [li, raw] : heads) {
    const auto t0 = Clock::now();
    auto dets = decode_level(raw, li, cfg_.score_threshold);
    if (acc) acc->add("head-level-" + std::to_string(li), ms_since(t0), 0, 0);
    all.insert(all.end(), dets.begin(), dets.end());
  }
  return nms(std::move(all), cfg_.nms_iou, cfg_.top_k);
}

}  // namespace vod
