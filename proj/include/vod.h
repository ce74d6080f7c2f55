/* C interface to the video-object-detection engine.
 *
 * All functions return a vod_status; on failure vod_last_error() holds a
 * thread-local message. Strings returned through char** parameters are
 * heap-allocated and must be released with vod_string_free(). */
#ifndef VOD_H
#define VOD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  VOD_OK = 0,
  VOD_ERROR = 1,           /* runtime failure */
  VOD_CONFIG_ERROR = 2,    /* malformed config or input file */
  VOD_INVARIANT_ERROR = 3  /* internal self-check failed */
} vod_status;

const char* vod_version(void);
const char* vod_last_error(void);
void vod_string_free(char* s);

/* Total pyramid location count for an input size and stride set. */
int64_t vod_nq_for_config(int input_h, int input_w, const int* strides, int num_strides);

/* Exact multiply-accumulate count of one attention aggregation. */
uint64_t vod_attention_op_count(uint64_t n_q, uint64_t n_k, uint64_t channels);

/* Renders a synthetic sequence described by spec_json into out_dir
 * (frame_%05d.ppm, truth.txt, meta.json). */
vod_status vod_generate(const char* spec_json, const char* out_dir);

/* Runs a detection pipeline over a sequence directory. Writes detections to
 * output_path plus a schedule trace to output_path + ".trace" (and mask RLE
 * dumps to ".masks" when export_masks is nonzero). metrics_json, when
 * non-NULL, receives a JSON summary. */
vod_status vod_detect(const char* run_json, const char* input_dir, const char* output_path,
                      int export_masks, char** metrics_json);

/* Per-part runtime/MAC dissection of one frame, median of `repetitions` runs.
 * Writes out_prefix + ".csv"/".json"; optional N_q sweep of the attention
 * cost written to out_prefix + "_attention.csv". */
vod_status vod_profile(const char* run_json, const char* input_dir, int repetitions,
                       const char* out_prefix, const int64_t* nq_values, int num_nq_values,
                       char** report_json);

/* Sweeps "r" or "T" over the given values; writes value,throughput_ratio,
 * recall,wall_seconds rows to out_csv. */
vod_status vod_sweep(const char* run_json, const char* input_dir, const char* param,
                     const double* values, int num_values, const char* out_csv, int runs,
                     char** csv_text);

/* Streaming pipeline over an opaque handle. Frames must be fed in order. */
typedef struct vod_pipeline vod_pipeline;

typedef struct {
  float x1, y1, x2, y2;
  float score;
  int class_id;
  int level_index;
} vod_detection;

vod_status vod_pipeline_create(const char* run_json, vod_pipeline** out);
void vod_pipeline_destroy(vod_pipeline* p);
vod_status vod_pipeline_reset(vod_pipeline* p);

/* image: channels-first RGB floats in [0,1], length 3*h*w. Copies at most
 * `capacity` detections into `out`; the full count is stored in out_count. */
vod_status vod_pipeline_process(vod_pipeline* p, const float* image, int h, int w,
                                vod_detection* out, int capacity, int* out_count);

#ifdef __cplusplus
}
#endif

#endif /* VOD_H */
