#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vod/cost.hpp"
#include "vod/detector.hpp"
#include "vod/io.hpp"
#include "vod/lpn.hpp"
#include "vod/spn.hpp"
#include "vod/synth.hpp"

namespace vod {

enum class PipelineKind { Baseline, Lpn, LpnSpn };

struct RunConfig {
  PipelineKind pipeline = PipelineKind::Baseline;
  DetectorConfig detector;
  float ratio_r = 0.8f;        // box adjustment ratio
  int interval_t = 7;          // frames between full detections
  int reference_count = 2;     // reference bank capacity (max 14)
  float attention_weight_scale = 0.0f;  // 0 = pick per weight mode

  void validate() const;
  float effective_attention_scale() const;
};

// Named operating points: fcos-like, centernet-like, yolox-like.
RunConfig preset_config(const std::string& name);

// Parses {"preset": ..., "pipeline": ..., "ratio_r": ..., "detector": {...}}.
// Preset fields apply first, explicit fields override.
RunConfig run_config_from_json(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

struct FrameResult {
  std::vector<Detection> detections;
  std::vector<Detection> candidates;  // pre-NMS, for audits
  bool full_frame = true;
  std::set<int> active_levels;
  bool aggregated = false;
  std::int64_t n_q = 0, n_k = 0;
  std::uint64_t attention_macs = 0;
};

// Sequential per-frame pipeline: detector plus optional LPN aggregation and
// SPN level scheduling. Frame t must complete before frame t+1 starts.
class VideoPipeline {
public:
  explicit VideoPipeline(const RunConfig& cfg);
  VideoPipeline(const RunConfig& cfg, Detector detector);

  FrameResult process_frame(const Tensor& image, CostAccumulator* acc = nullptr);
  void reset();

  const Detector& detector() const { return detector_; }
  const RunConfig& config() const { return cfg_; }
  const std::vector<ScheduleEntry>& trace() const { return trace_; }
  const std::optional<ForegroundMaskSet>& last_masks() const { return last_masks_; }
  std::uint64_t total_attention_macs() const { return total_attention_macs_; }

private:
  RunConfig cfg_;
  Detector detector_;
  AttentionParams attention_;
  SkipSchedule schedule_;
  ReferenceBank bank_;
  ValidatedBoxes prev_;
  std::optional<ForegroundMaskSet> last_masks_;
  std::vector<ScheduleEntry> trace_;
  std::uint64_t total_attention_macs_ = 0;
  int frame_index_ = 0;
};

struct RunStats {
  double wall_seconds = 0.0;
  std::uint64_t attention_macs = 0;
  int frames = 0;
};

std::vector<std::vector<Detection>> run_video(VideoPipeline& pipeline,
                                              const std::vector<Tensor>& frames,
                                              RunStats* stats = nullptr);

// Median per-part cost over `repetitions` runs of one frame (after warm-up).
CostReport profile_frame(const RunConfig& cfg, const Tensor& frame, int repetitions);

struct SweepRow {
  double value = 0.0;
  double wall_seconds = 0.0;
  double throughput_ratio = 0.0;  // baseline wall time / this wall time
  double recall = 0.0;
};

// Runs the pipeline over `seq` for each parameter value ("r" or "T"),
// median wall time of `runs` runs; throughput relative to the baseline
// pipeline on the same machine and sequence.
std::vector<SweepRow> sweep_parameter(const RunConfig& base, const std::string& param,
                                      const std::vector<double>& values, const Sequence& seq,
                                      int runs = 3);

// ---- command layer (shared by the C API and the CLI) ----

SequenceSpec sequence_spec_from_json(const std::string& json_text);

void cmd_generate(const std::string& spec_json, const std::string& out_dir);

// Writes detections to output_path (+ .trace, and .masks when export_masks);
// returns a metrics summary as JSON text.
std::string cmd_detect(const std::string& run_json, const std::string& input_dir,
                       const std::string& output_path, bool export_masks = false);

// Writes <out_prefix>.csv and <out_prefix>.json; empty input_dir profiles a
// generated frame. nq_values, when non-empty, adds an attention sweep CSV.
std::string cmd_profile(const std::string& run_json, const std::string& input_dir,
                        int repetitions, const std::string& out_prefix,
                        const std::vector<std::int64_t>& nq_values = {});

// Writes "value,throughput_ratio,recall,wall_seconds" rows to out_csv.
std::string cmd_sweep(const std::string& run_json, const std::string& input_dir,
                      const std::string& param, const std::vector<double>& values,
                      const std::string& out_csv, int runs = 3);

}  // namespace vod
