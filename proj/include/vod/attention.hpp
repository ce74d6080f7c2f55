#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vod/tensor.hpp"

namespace vod {

// Location of a feature cell: pyramid level plus cell coordinates.
struct CellCoord {
  int level_index = 0;
  int x = 0;
  int y = 0;
};

// Provenance of a key element.
struct KeyOrigin {
  int frame_index = 0;
  int level_index = 0;
  int x = 0;
  int y = 0;
};

struct QuerySet {
  Tensor features;  // [N_q, C]
  std::vector<CellCoord> coords;
  int count() const { return features.size() == 0 ? 0 : features.dim(0); }
};

struct KeySet {
  Tensor features;  // [N_k, C]
  std::vector<KeyOrigin> provenance;
  int count() const { return features.size() == 0 ? 0 : features.dim(0); }
};

struct AttentionParams {
  Tensor transform;  // [C, C] linear map applied to keys
  float scale = 1.0f;

  static AttentionParams seeded(int channels, uint64_t seed, float weight_scale);
};

// Row-stochastic similarity weights, softmax((q . k) * scale) over keys.
// Empty key set yields nullopt (aggregation skipped).
std::optional<Tensor> similarity_weights(const QuerySet& q, const KeySet& k, float scale);

// Residual one-head aggregation: out_i = q_i + sum_j w_ij * (W k_j).
// Empty key set yields nullopt; the caller keeps features unchanged.
std::optional<Tensor> aggregate(const QuerySet& q, const KeySet& k, const AttentionParams& params);

// Exact multiply-accumulate count of one aggregation call:
// similarity N_q*N_k*C, key transform N_k*C^2, weighted sum N_q*N_k*C.
// Zero queries means the whole call is skipped and counts nothing.
std::uint64_t attention_op_count(std::uint64_t n_q, std::uint64_t n_k, std::uint64_t c);

// The two N_q*N_k*C terms only; scales exactly quadratically when N_k tracks N_q.
std::uint64_t attention_quadratic_ops(std::uint64_t n_q, std::uint64_t n_k, std::uint64_t c);

}  // namespace vod
