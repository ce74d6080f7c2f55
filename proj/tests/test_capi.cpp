// Exercises the shared-library C interface end to end: status codes, error
// text, the command entry points, and the streaming pipeline handle.
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vod.h"

namespace fs = std::filesystem;

static int g_failures = 0;

#define EXPECT(cond)                                                    \
  do {                                                                  \
    if (!(cond)) {                                                      \
      std::fprintf(stderr, "FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++g_failures;                                                     \
    }                                                                   \
  } while (0)

static const char* kRunJson = R"({
  "pipeline": "lpn_spn", "interval_t": 3,
  "detector": {"input_h": 128, "input_w": 128, "strides": [8, 16, 32],
               "channels": 16, "num_classes": 4, "weight_mode": "analytic"}
})";

static const char* kSpecJson = R"({
  "num_frames": 5, "height": 128, "width": 128, "seed": 31,
  "objects": [{"box": [24, 32, 64, 72], "velocity": [2, 1], "class_id": 1,
               "intensity": 0.9}]
})";

int main() {
  EXPECT(vod_version() != nullptr);
  EXPECT(std::strlen(vod_version()) > 0);

  // pure helpers
  const int strides1[] = {4};
  EXPECT(vod_nq_for_config(512, 512, strides1, 1) == 16384);
  const int strides3[] = {8, 16, 32};
  EXPECT(vod_nq_for_config(640, 640, strides3, 3) == 8400);
  EXPECT(vod_attention_op_count(0, 10, 64) == 0);
  EXPECT(vod_attention_op_count(300, 300, 256) ==
         300ull * 300 * 256 + 300ull * 256 * 256 + 300ull * 300 * 256);

  // bad config surfaces VOD_CONFIG_ERROR and an error message
  EXPECT(vod_generate("not json", "/tmp/nowhere") == VOD_CONFIG_ERROR);
  EXPECT(vod_last_error() != nullptr);
  EXPECT(std::strlen(vod_last_error()) > 0);

  fs::path tmp = fs::temp_directory_path() /
                 ("vod_capi_test_" + std::to_string(std::random_device{}()));
  fs::create_directories(tmp);
  const std::string seq_dir = (tmp / "seq").string();
  const std::string out_path = (tmp / "dets.txt").string();

  EXPECT(vod_generate(kSpecJson, seq_dir.c_str()) == VOD_OK);
  EXPECT(fs::exists(fs::path(seq_dir) / "frame_00000.ppm"));

  char* metrics = nullptr;
  EXPECT(vod_detect(kRunJson, seq_dir.c_str(), out_path.c_str(), 1, &metrics) == VOD_OK);
  EXPECT(metrics != nullptr);
  if (metrics) {
    EXPECT(std::strstr(metrics, "\"recall\"") != nullptr);
    vod_string_free(metrics);
  }
  EXPECT(fs::exists(out_path));
  EXPECT(fs::exists(out_path + ".trace"));
  EXPECT(fs::exists(out_path + ".masks"));

  // detect on a missing directory fails without crashing
  EXPECT(vod_detect(kRunJson, (tmp / "absent").string().c_str(), out_path.c_str(), 0,
                    nullptr) != VOD_OK);

  char* report = nullptr;
  const int64_t nqs[] = {64, 128, 256};
  EXPECT(vod_profile(kRunJson, seq_dir.c_str(), 3, (tmp / "prof").string().c_str(), nqs, 3,
                     &report) == VOD_OK);
  if (report) {
    EXPECT(std::strstr(report, "total_ms") != nullptr);
    vod_string_free(report);
  }
  EXPECT(fs::exists(tmp / "prof.csv"));
  EXPECT(fs::exists(tmp / "prof_attention.csv"));
  EXPECT(vod_profile(kRunJson, seq_dir.c_str(), 1, (tmp / "p2").string().c_str(), nullptr, 0,
                     nullptr) == VOD_CONFIG_ERROR);

  char* csv = nullptr;
  const double rvals[] = {0.8, 1.0};
  EXPECT(vod_sweep(kRunJson, seq_dir.c_str(), "r", rvals, 2,
                   (tmp / "sweep.csv").string().c_str(), 1, &csv) == VOD_OK);
  if (csv) {
    EXPECT(std::strstr(csv, "throughput_ratio") != nullptr);
    vod_string_free(csv);
  }
  EXPECT(vod_sweep(kRunJson, seq_dir.c_str(), "bogus", rvals, 2,
                   (tmp / "s2.csv").string().c_str(), 1, nullptr) == VOD_CONFIG_ERROR);

  // streaming handle
  vod_pipeline* pipe = nullptr;
  EXPECT(vod_pipeline_create("{\"pipeline\": \"nope\"}", &pipe) == VOD_CONFIG_ERROR);
  EXPECT(pipe == nullptr);
  EXPECT(vod_pipeline_create(kRunJson, &pipe) == VOD_OK);
  EXPECT(pipe != nullptr);

  if (pipe) {
    std::vector<float> frame(3 * 128 * 128, 0.1f);
    // paint a 40x40 object the analytic detector can find
    for (int y = 32; y < 72; ++y)
      for (int x = 24; x < 64; ++x) {
        frame[0 * 128 * 128 + y * 128 + x] = 0.9f;           // intensity
        frame[1 * 128 * 128 + y * 128 + x] = 2.0f / 8.0f;    // class 1 code
        frame[2 * 128 * 128 + y * 128 + x] = 0.9f;
      }

    vod_detection dets[16];
    int count = -1;
    EXPECT(vod_pipeline_process(pipe, frame.data(), 128, 128, dets, 16, &count) == VOD_OK);
    EXPECT(count == 1);
    if (count == 1) {
      EXPECT(dets[0].class_id == 1);
      EXPECT(std::fabs(dets[0].x1 - 24.0f) <= 1.0f);
      EXPECT(std::fabs(dets[0].y2 - 72.0f) <= 1.0f);
      EXPECT(dets[0].score > 0.5f);
    }

    // capacity smaller than the detection count still reports the full count
    int full = -1;
    EXPECT(vod_pipeline_process(pipe, frame.data(), 128, 128, nullptr, 0, &full) == VOD_OK);
    EXPECT(full == 1);

    // wrong frame size is a config error
    EXPECT(vod_pipeline_process(pipe, frame.data(), 64, 64, dets, 16, &count) ==
           VOD_CONFIG_ERROR);

    EXPECT(vod_pipeline_reset(pipe) == VOD_OK);
    EXPECT(vod_pipeline_process(pipe, frame.data(), 128, 128, dets, 16, &count) == VOD_OK);
    EXPECT(count == 1);
    vod_pipeline_destroy(pipe);
  }

  fs::remove_all(tmp);

  if (g_failures == 0) {
    std::printf("capi_tests: all checks passed\n");
    return 0;
  }
  std::fprintf(stderr, "capi_tests: %d check(s) failed\n", g_failures);
  return 1;
}
