#include "vod.h"

#include <cstring>
#include <string>

#include "vod/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
vod_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return VOD_OK;
  } catch (const vod::ConfigError& e) {
    g_last_error = e.what();
    return VOD_CONFIG_ERROR;
  } catch (const vod::InvariantError& e) {
    g_last_error = e.what();
    return VOD_INVARIANT_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VOD_ERROR;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct vod_pipeline {
  vod::RunConfig config;
  vod::VideoPipeline impl;
};

extern "C" {

const char* vod_version(void) { return "1.0.0"; }

const char* vod_last_error(void) { return g_last_error.c_str(); }

void vod_string_free(char* s) { std::free(s); }

int64_t vod_nq_for_config(int input_h, int input_w, const int* strides, int num_strides) {
  try {
    std::vector<int> s(strides, strides + num_strides);
    return vod::nq_for_config(input_h, input_w, s);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return -1;
  }
}

uint64_t vod_attention_op_count(uint64_t n_q, uint64_t n_k, uint64_t channels) {
  return vod::attention_op_count(n_q, n_k, channels);
}

vod_status vod_generate(const char* spec_json, const char* out_dir) {
  return guarded([&] { vod::cmd_generate(spec_json, out_dir); });
}

vod_status vod_detect(const char* run_json, const char* input_dir, const char* output_path,
                      int export_masks, char** metrics_json) {
  return guarded([&] {
    std::string metrics = vod::cmd_detect(run_json, input_dir, output_path, export_masks != 0);
    if (metrics_json) *metrics_json = dup_string(metrics);
  });
}

vod_status vod_profile(const char* run_json, const char* input_dir, int repetitions,
                       const char* out_prefix, const int64_t* nq_values, int num_nq_values,
                       char** report_json) {
  return guarded([&] {
    std::vector<int64_t> nq(nq_values, nq_values + num_nq_values);
    std::string report = vod::cmd_profile(run_json, input_dir ? input_dir : "", repetitions,
                                          out_prefix, nq);
    if (report_json) *report_json = dup_string(report);
  });
}

vod_status vod_sweep(const char* run_json, const char* input_dir, const char* param,
                     const double* values, int num_values, const char* out_csv, int runs,
                     char** csv_text) {
  return guarded([&] {
    std::vector<double> v(values, values + num_values);
    std::string csv = vod::cmd_sweep(run_json, input_dir, param, v, out_csv, runs);
    if (csv_text) *csv_text = dup_string(csv);
  });
}

vod_status vod_pipeline_create(const char* run_json, vod_pipeline** out) {
  return guarded([&] {
    vod::RunConfig cfg = vod::run_config_from_json(run_json);
    *out = new vod_pipeline{cfg, vod::VideoPipeline(cfg)};
  });
}

void vod_pipeline_destroy(vod_pipeline* p) { delete p; }

vod_status vod_pipeline_reset(vod_pipeline* p) {
  return guarded([&] { p->impl.reset(); });
}

vod_status vod_pipeline_process(vod_pipeline* p, const float* image, int h, int w,
                                vod_detection* out, int capacity, int* out_count) {
  return guarded([&] {
    vod::Tensor img({3, h, w},
                    std::vector<float>(image, image + static_cast<std::size_t>(3) * h * w));
    vod::FrameResult res = p->impl.process_frame(img);
    const int n = static_cast<int>(res.detections.size());
    if (out_count) *out_count = n;
    const int copy = std::min(n, capacity);
    for (int i = 0; i < copy; ++i) {
      const auto& d = res.detections[i];
      out[i] = vod_detection{d.x1, d.y1, d.x2, d.y2, d.score, d.class_id, d.level_index};
    }
  });
}

}  // extern "C"
