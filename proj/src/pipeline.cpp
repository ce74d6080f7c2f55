#include "vod/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vod {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void RunConfig::validate() const {
  detector.validate();
  if (ratio_r <= 0.0f) throw ConfigError("ratio_r must be positive");
  if (interval_t < 0) throw ConfigError("interval_t must be non-negative");
  if (reference_count < 1 || reference_count > 14)
    throw ConfigError("reference_count must be in [1, 14]");
}

float RunConfig::effective_attention_scale() const {
  if (attention_weight_scale > 0.0f) return attention_weight_scale;
  // Analytic features must survive enhancement nearly unperturbed so the
  // synthetic decode oracle stays exact.
  return detector.weight_mode == WeightMode::Analytic ? 0.01f : 0.1f;
}

RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  if (name == "fcos-like") {
    cfg.detector.input_h = 600;
    cfg.detector.input_w = 1000;
    cfg.detector.strides = {8, 16, 32, 64, 128};
    cfg.detector.channels = 256;
    cfg.detector.head_depth = 4;
    cfg.detector.decode_kind = DecodeKind::CenterDistance;
  } else if (name == "centernet-like") {
    cfg.detector.input_h = 512;
    cfg.detector.input_w = 512;
    cfg.detector.strides = {4};
    cfg.detector.channels = 64;
    cfg.detector.head_depth = 2;
    cfg.detector.decode_kind = DecodeKind::HeatmapPeak;
  } else if (name == "yolox-like") {
    cfg.detector.input_h = 640;
    cfg.detector.input_w = 640;
    cfg.detector.strides = {8, 16, 32};
    cfg.detector.channels = 128;
    cfg.detector.head_depth = 2;
    cfg.detector.decode_kind = DecodeKind::CenterDistance;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  return cfg;
}

static PipelineKind pipeline_from_string(const std::string& s) {
  if (s == "baseline") return PipelineKind::Baseline;
  if (s == "lpn") return PipelineKind::Lpn;
  if (s == "lpn_spn") return PipelineKind::LpnSpn;
  throw ConfigError("unknown pipeline: " + s);
}

static void apply_detector_json(DetectorConfig& d, const json& j) {
  if (j.contains("input_h")) d.input_h = j["input_h"].get<int>();
  if (j.contains("input_w")) d.input_w = j["input_w"].get<int>();
  if (j.contains("strides")) d.strides = j["strides"].get<std::vector<int>>();
  if (j.contains("channels")) d.channels = j["channels"].get<int>();
  if (j.contains("head_depth")) d.head_depth = j["head_depth"].get<int>();
  if (j.contains("num_classes")) d.num_classes = j["num_classes"].get<int>();
  if (j.contains("score_threshold")) d.score_threshold = j["score_threshold"].get<float>();
  if (j.contains("nms_iou")) d.nms_iou = j["nms_iou"].get<float>();
  if (j.contains("top_k")) d.top_k = j["top_k"].get<int>();
  if (j.contains("seed")) d.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("weight_mode")) {
    const std::string m = j["weight_mode"].get<std::string>();
    if (m == "analytic")
      d.weight_mode = WeightMode::Analytic;
    else if (m == "seeded-random")
      d.weight_mode = WeightMode::SeededRandom;
    else
      throw ConfigError("unknown weight_mode: " + m);
  }
  if (j.contains("decode")) {
    const std::string m = j["decode"].get<std::string>();
    if (m == "center-distance")
      d.decode_kind = DecodeKind::CenterDistance;
    else if (m == "heatmap-peak")
      d.decode_kind = DecodeKind::HeatmapPeak;
    else
      throw ConfigError("unknown decode kind: " + m);
  }
}

RunConfig run_config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config JSON: ") + e.what());
  }
  RunConfig cfg;
  if (j.contains("preset")) cfg = preset_config(j["preset"].get<std::string>());
  if (j.contains("pipeline")) cfg.pipeline = pipeline_from_string(j["pipeline"].get<std::string>());
  if (j.contains("ratio_r")) cfg.ratio_r = j["ratio_r"].get<float>();
  if (j.contains("interval_t")) cfg.interval_t = j["interval_t"].get<int>();
  if (j.contains("reference_count")) cfg.reference_count = j["reference_count"].get<int>();
  if (j.contains("attention_weight_scale"))
    cfg.attention_weight_scale = j["attention_weight_scale"].get<float>();
  if (j.contains("detector")) apply_detector_json(cfg.detector, j["detector"]);
  cfg.validate();
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["pipeline"] = cfg.pipeline == PipelineKind::Baseline ? "baseline"
                  : cfg.pipeline == PipelineKind::Lpn    ? "lpn"
                                                         : "lpn_spn";
  j["ratio_r"] = cfg.ratio_r;
  j["interval_t"] = cfg.interval_t;
  j["reference_count"] = cfg.reference_count;
  json d;
  d["input_h"] = cfg.detector.input_h;
  d["input_w"] = cfg.detector.input_w;
  d["strides"] = cfg.detector.strides;
  d["channels"] = cfg.detector.channels;
  d["head_depth"] = cfg.detector.head_depth;
  d["num_classes"] = cfg.detector.num_classes;
  d["score_threshold"] = cfg.detector.score_threshold;
  d["nms_iou"] = cfg.detector.nms_iou;
  d["top_k"] = cfg.detector.top_k;
  d["seed"] = cfg.detector.seed;
  d["weight_mode"] =
      cfg.detector.weight_mode == WeightMode::Analytic ? "analytic" : "seeded-random";
  d["decode"] = cfg.detector.decode_kind == DecodeKind::HeatmapPeak ? "heatmap-peak"
                                                                    : "center-distance";
  j["detector"] = d;
  return j.dump(2);
}

VideoPipeline::VideoPipeline(const RunConfig& cfg) : VideoPipeline(cfg, Detector(cfg.detector)) {}

VideoPipeline::VideoPipeline(const RunConfig& cfg, Detector detector)
    : cfg_(cfg),
      detector_(std::move(detector)),
      attention_(AttentionParams::seeded(cfg.detector.channels, cfg.detector.seed ^ 0xA77E,
                                         cfg.effective_attention_scale())),
      schedule_(SkipSchedule::initial(cfg.interval_t)),
      bank_(cfg.reference_count, cfg.detector.seed ^ 0xBA4C) {
  cfg_.validate();
}

void VideoPipeline::reset() {
  schedule_ = SkipSchedule::initial(cfg_.interval_t);
  bank_ = ReferenceBank(cfg_.reference_count, cfg_.detector.seed ^ 0xBA4C);
  prev_ = ValidatedBoxes{};
  last_masks_.reset();
  trace_.clear();
  total_attention_macs_ = 0;
  frame_index_ = 0;
}

FrameResult VideoPipeline::process_frame(const Tensor& image, CostAccumulator* acc) {
  const DetectorConfig& dcfg = detector_.config();
  const bool spn = cfg_.pipeline == PipelineKind::LpnSpn;
  const bool full = spn ? is_full_frame(schedule_) : true;
  const std::set<int> active =
      spn ? plan_frame(schedule_, dcfg.num_levels()) : detector_.all_levels();

  FeaturePyramid pyramid = detector_.build_pyramid(image, acc);
  pyramid.frame_index = frame_index_;

  const bool uses_bank = cfg_.pipeline != PipelineKind::Baseline;
  FeaturePyramid reference_copy;
  if (uses_bank) reference_copy = pyramid;  // references hold pre-aggregation features

  FrameResult result;
  result.full_frame = full;
  result.active_levels = active;

  if (uses_bank && !prev_.empty() && !bank_.empty()) {
    const auto t0 = Clock::now();
    ForegroundMaskSet masks = build_masks(prev_, dcfg, cfg_.ratio_r, active);
    AggregationStats stats =
        partial_aggregate(pyramid, masks, bank_.entries(), dcfg, cfg_.ratio_r, attention_);
    if (acc)
      acc->add("attention", ms_since(t0), stats.mac_count,
               static_cast<std::uint64_t>(stats.n_q + stats.n_k) * dcfg.channels * sizeof(float));
    result.aggregated = stats.aggregated;
    result.n_q = stats.n_q;
    result.n_k = stats.n_k;
    result.attention_macs = stats.mac_count;
    total_attention_macs_ += stats.mac_count;
    last_masks_ = std::move(masks);
  } else {
    last_masks_.reset();
  }

  auto heads = detector_.run_heads(pyramid, active, acc);
  for (const auto& [li, raw] : heads) {
    const auto t0 = Clock::now();
    auto dets = detector_.decode_level(raw, li, dcfg.score_threshold);
    if (acc) acc->add("head-level-" + std::to_string(li), ms_since(t0), 0, 0);
    result.candidates.insert(result.candidates.end(), dets.begin(), dets.end());
  }
  result.detections = nms(result.candidates, dcfg.nms_iou, dcfg.top_k);

  if (spn) schedule_ = update(schedule_, result.candidates, full, dcfg.validate_threshold);
  trace_.push_back({frame_index_, full, active});
  prev_ = validate(result.detections, dcfg.validate_threshold, frame_index_);
  if (uses_bank) bank_.observe({frame_index_, std::move(reference_copy), prev_});
  ++frame_index_;
  return result;
}

std::vector<std::vector<Detection>> run_video(VideoPipeline& pipeline,
                                              const std::vector<Tensor>& frames,
                                              RunStats* stats) {
  std::vector<std::vector<Detection>> out;
  const auto t0 = Clock::now();
  for (const auto& frame : frames) out.push_back(pipeline.process_frame(frame).detections);
  if (stats) {
    stats->wall_seconds = ms_since(t0) / 1000.0;
    stats->attention_macs = pipeline.total_attention_macs();
    stats->frames = static_cast<int>(frames.size());
  }
  return out;
}

CostReport profile_frame(const RunConfig& cfg, const Tensor& frame, int repetitions) {
  if (repetitions < 3) throw ConfigError("profile_frame needs >= 3 repetitions");
  VideoPipeline pipeline(cfg);
  pipeline.process_frame(frame);  // warm caches and seed temporal state
  pipeline.process_frame(frame);
  std::vector<CostAccumulator> runs;
  for (int i = 0; i < repetitions; ++i) {
    CostAccumulator acc;
    pipeline.process_frame(frame, &acc);
    runs.push_back(std::move(acc));
  }
  return build_report(runs);
}

std::vector<SweepRow> sweep_parameter(const RunConfig& base, const std::string& param,
                                      const std::vector<double>& values, const Sequence& seq,
                                      int runs) {
  if (param != "r" && param != "T") throw ConfigError("sweep parameter must be 'r' or 'T'");
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (runs < 1) throw ConfigError("sweep needs at least one run per value");

  Detector shared(base.detector);
  auto timed_runs = [&](const RunConfig& cfg) {
    std::vector<double> walls;
    std::vector<std::vector<Detection>> dets;
    for (int i = 0; i < runs; ++i) {
      VideoPipeline p(cfg, shared);
      RunStats stats;
      dets = run_video(p, seq.frames, &stats);
      walls.push_back(stats.wall_seconds);
    }
    std::sort(walls.begin(), walls.end());
    return std::make_pair(walls[walls.size() / 2], dets);
  };

  RunConfig base_cfg = base;
  base_cfg.pipeline = PipelineKind::Baseline;
  const double base_wall = timed_runs(base_cfg).first;

  std::vector<SweepRow> rows;
  for (double v : values) {
    RunConfig cfg = base;
    if (param == "r") {
      cfg.pipeline = cfg.pipeline == PipelineKind::Baseline ? PipelineKind::Lpn : cfg.pipeline;
      cfg.ratio_r = static_cast<float>(v);
    } else {
      cfg.pipeline = PipelineKind::LpnSpn;
      cfg.interval_t = static_cast<int>(v);
    }
    cfg.validate();
    auto [wall, dets] = timed_runs(cfg);
    SweepRow row;
    row.value = v;
    row.wall_seconds = wall;
    row.throughput_ratio = wall > 0.0 ? base_wall / wall : 0.0;
    if (!seq.truth.frames.empty()) row.recall = evaluate(dets, seq.truth).recall;
    rows.push_back(row);
  }
  return rows;
}

SequenceSpec sequence_spec_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad sequence spec JSON: ") + e.what());
  }
  SequenceSpec spec;
  if (j.contains("num_frames")) spec.num_frames = j["num_frames"].get<int>();
  if (j.contains("height")) spec.height = j["height"].get<int>();
  if (j.contains("width")) spec.width = j["width"].get<int>();
  if (j.contains("noise")) spec.noise = j["noise"].get<float>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("objects")) {
    for (const auto& o : j["objects"]) {
      ObjectSpec obj;
      const auto box = o.at("box").get<std::vector<float>>();
      if (box.size() != 4) throw ConfigError("object box must have 4 coordinates");
      obj.x1 = box[0];
      obj.y1 = box[1];
      obj.x2 = box[2];
      obj.y2 = box[3];
      if (o.contains("velocity")) {
        const auto v = o["velocity"].get<std::vector<float>>();
        if (v.size() != 2) throw ConfigError("object velocity must have 2 components");
        obj.vx = v[0];
        obj.vy = v[1];
      }
      if (o.contains("growth")) obj.growth = o["growth"].get<float>();
      if (o.contains("intensity")) obj.intensity = o["intensity"].get<float>();
      if (o.contains("class_id")) obj.class_id = o["class_id"].get<int>();
      spec.objects.push_back(obj);
    }
  }
  spec.validate();
  return spec;
}

void cmd_generate(const std::string& spec_json, const std::string& out_dir) {
  const SequenceSpec spec = sequence_spec_from_json(spec_json);
  write_sequence(out_dir, generate(spec));
}

std::string cmd_detect(const std::string& run_json, const std::string& input_dir,
                       const std::string& output_path, bool export_masks) {
  const RunConfig cfg = run_config_from_json(run_json);
  const Sequence seq = read_sequence(input_dir);
  VideoPipeline pipeline(cfg);

  std::ofstream masks_file;
  if (export_masks) masks_file.open(output_path + ".masks");

  std::vector<std::vector<Detection>> dets;
  const auto t0 = Clock::now();
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    dets.push_back(pipeline.process_frame(seq.frames[t]).detections);
    if (export_masks && pipeline.last_masks())
      masks_file << "frame " << t << "\n" << masks_to_rle(*pipeline.last_masks());
  }
  const double wall = ms_since(t0) / 1000.0;

  write_detections(output_path, dets);
  std::ofstream trace_file(output_path + ".trace");
  for (const auto& e : pipeline.trace()) trace_file << schedule_line(e) << "\n";

  json metrics;
  metrics["frames"] = seq.frames.size();
  metrics["wall_seconds"] = wall;
  metrics["fps"] = wall > 0.0 ? seq.frames.size() / wall : 0.0;
  metrics["attention_macs"] = pipeline.total_attention_macs();
  if (!seq.truth.frames.empty()) {
    const EvalResult ev = evaluate(dets, seq.truth);
    metrics["recall"] = ev.recall;
    metrics["precision"] = ev.precision;
  }
  return metrics.dump(2);
}

static Tensor default_profile_frame(const DetectorConfig& d) {
  SequenceSpec spec;
  spec.num_frames = 1;
  spec.height = d.input_h;
  spec.width = d.input_w;
  spec.noise = 0.05f;
  spec.seed = d.seed;
  ObjectSpec obj;
  obj.x1 = d.input_w * 0.25f;
  obj.y1 = d.input_h * 0.25f;
  obj.x2 = d.input_w * 0.75f;
  obj.y2 = d.input_h * 0.75f;
  spec.objects.push_back(obj);
  return generate(spec).frames[0];
}

std::string cmd_profile(const std::string& run_json, const std::string& input_dir,
                        int repetitions, const std::string& out_prefix,
                        const std::vector<std::int64_t>& nq_values) {
  const RunConfig cfg = run_config_from_json(run_json);
  Tensor frame = input_dir.empty() ? default_profile_frame(cfg.detector)
                                   : read_sequence(input_dir).frames.at(0);
  const CostReport report = profile_frame(cfg, frame, repetitions);
  {
    std::ofstream csv(out_prefix + ".csv");
    csv << report.to_csv();
    std::ofstream js(out_prefix + ".json");
    js << report.to_json();
  }
  if (!nq_values.empty()) {
    const AttentionSweep sweep = attention_cost_sweep(nq_values, cfg.detector.channels, 1, true);
    std::ofstream csv(out_prefix + "_attention.csv");
    csv << "n_q,n_k,total_macs,quadratic_macs,wall_ms\n";
    for (const auto& r : sweep.rows)
      csv << r.n_q << "," << r.n_k << "," << r.total_macs << "," << r.quadratic_macs << ","
          << r.wall_ms << "\n";
    csv << "# mac_exponent=" << sweep.mac_exponent << " wall_exponent=" << sweep.wall_exponent
        << "\n";
  }
  return report.to_json();
}

std::string cmd_sweep(const std::string& run_json, const std::string& input_dir,
                      const std::string& param, const std::vector<double>& values,
                      const std::string& out_csv, int runs) {
  const RunConfig cfg = run_config_from_json(run_json);
  const Sequence seq = read_sequence(input_dir);
  const auto rows = sweep_parameter(cfg, param, values, seq, runs);
  std::ostringstream os;
  os << "value,throughput_ratio,recall,wall_seconds\n";
  for (const auto& r : rows)
    os << r.value << "," << r.throughput_ratio << "," << r.recall << "," << r.wall_seconds << "\n";
  std::ofstream f(out_csv);
  f << os.str();
  return os.str();
}

}  // namespace vod
