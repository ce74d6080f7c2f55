// Command-line harness over the C API: generate synthetic sequences, run
// detection pipelines, profile per-part cost, and sweep r / T.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vod.h"

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::fprintf(stderr, "cannot open %s\n", path.c_str());
    std::exit(VOD_CONFIG_ERROR);
  }
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

struct RunFlags {
  std::string config_file, preset, pipeline, weight_mode;
  double ratio_r = 0.8;
  int interval_t = 7;
  int refs = 2;
  std::uint64_t seed = 1;

  CLI::App* attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "run config JSON file");
    cmd->add_option("--preset", preset, "detector preset: fcos-like|centernet-like|yolox-like");
    cmd->add_option("--pipeline", pipeline, "baseline|lpn|lpn_spn");
    cmd->add_option("--ratio-r", ratio_r, "box adjustment ratio r");
    cmd->add_option("--interval-t", interval_t, "detection frame interval T");
    cmd->add_option("--refs", refs, "reference frame count");
    cmd->add_option("--seed", seed, "detector weight seed");
    cmd->add_option("--weight-mode", weight_mode, "seeded-random|analytic");
    return cmd;
  }

  std::string build_json(const CLI::App* cmd) const {
    json j = config_file.empty() ? json::object() : json::parse(read_file(config_file));
    if (cmd->count("--preset")) j["preset"] = preset;
    if (cmd->count("--pipeline")) j["pipeline"] = pipeline;
    if (cmd->count("--ratio-r")) j["ratio_r"] = ratio_r;
    if (cmd->count("--interval-t")) j["interval_t"] = interval_t;
    if (cmd->count("--refs")) j["reference_count"] = refs;
    if (cmd->count("--seed")) j["detector"]["seed"] = seed;
    if (cmd->count("--weight-mode")) j["detector"]["weight_mode"] = weight_mode;
    return j.dump();
  }
};

int fail(vod_status st) {
  std::fprintf(stderr, "error: %s\n", vod_last_error());
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale video object detection engine"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "render a synthetic sequence");
  std::string spec_file, out_dir;
  gen->add_option("--spec", spec_file, "sequence spec JSON file")->required();
  gen->add_option("--out", out_dir, "output directory")->required();

  // detect
  auto* det = app.add_subcommand("detect", "run a detection pipeline over a sequence");
  std::string det_input, det_output;
  bool export_masks = false;
  RunFlags det_flags;
  det->add_option("--input", det_input, "sequence directory")->required();
  det->add_option("--out", det_output, "detections output file")->required();
  det->add_flag("--export-masks", export_masks, "dump per-frame mask RLE");
  det_flags.attach(det);

  // profile
  auto* prof = app.add_subcommand("profile", "per-part runtime dissection of one frame");
  std::string prof_input, prof_prefix, nq_sweep;
  int reps = 5;
  RunFlags prof_flags;
  prof->add_option("--input", prof_input, "sequence directory (default: generated frame)");
  prof->add_option("--out", prof_prefix, "output file prefix")->required();
  prof->add_option("--reps", reps, "repetitions (median)");
  prof->add_option("--nq-sweep", nq_sweep, "comma-separated N_q values for attention sweep");
  prof_flags.attach(prof);

  // sweep
  auto* swp = app.add_subcommand("sweep", "sweep r or T and report throughput/recall");
  std::string swp_param, swp_values, swp_input, swp_out;
  int swp_runs = 3;
  RunFlags swp_flags;
  swp->add_option("--param", swp_param, "r or T")->required();
  swp->add_option("--values", swp_values, "comma-separated values")->required();
  swp->add_option("--input", swp_input, "sequence directory")->required();
  swp->add_option("--out", swp_out, "output CSV")->required();
  swp->add_option("--runs", swp_runs, "runs per value (median)");
  swp_flags.attach(swp);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const vod_status st = vod_generate(read_file(spec_file).c_str(), out_dir.c_str());
    return st == VOD_OK ? 0 : fail(st);
  }

  if (det->parsed()) {
    char* metrics = nullptr;
    const vod_status st = vod_detect(det_flags.build_json(det).c_str(), det_input.c_str(),
                                     det_output.c_str(), export_masks ? 1 : 0, &metrics);
    if (st != VOD_OK) return fail(st);
    std::printf("%s\n", metrics);
    vod_string_free(metrics);
    return 0;
  }

  if (prof->parsed()) {
    std::vector<int64_t> nq;
    if (!nq_sweep.empty())
      for (double v : parse_values(nq_sweep)) nq.push_back(static_cast<int64_t>(v));
    char* report = nullptr;
    const vod_status st =
        vod_profile(prof_flags.build_json(prof).c_str(), prof_input.c_str(), reps,
                    prof_prefix.c_str(), nq.data(), static_cast<int>(nq.size()), &report);
    if (st != VOD_OK) return fail(st);
    std::printf("%s\n", report);
    vod_string_free(report);
    return 0;
  }

  if (swp->parsed()) {
    const auto values = parse_values(swp_values);
    char* csv = nullptr;
    const vod_status st =
        vod_sweep(swp_flags.build_json(swp).c_str(), swp_input.c_str(), swp_param.c_str(),
                  values.data(), static_cast<int>(values.size()), swp_out.c_str(), swp_runs, &csv);
    if (st != VOD_OK) return fail(st);
    std::printf("%s", csv);
    vod_string_free(csv);
    return 0;
  }
  return 0;
}
