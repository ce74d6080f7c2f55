#include "vod/attention.hpp"

#include <cmath>
#include <random>

namespace vod {

AttentionParams AttentionParams::seeded(int channels, uint64_t seed, float weight_scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, weight_scale);
  Tensor w({channels, channels});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = dist(rng);
  return AttentionParams{std::move(w), 1.0f / std::sqrt(static_cast<float>(channels))};
}

std::optional<Tensor> similarity_weights(const QuerySet& q, const KeySet& k, float scale) {
  if (k.count() == 0) return std::nullopt;
  const int nq = q.count(), nk = k.count(), c = q.features.dim(1);
  if (k.features.dim(1) != c) throw ConfigError("query/key channel mismatch");
  Tensor logits({nq, nk});
  for (int i = 0; i < nq; ++i) {
    const float* qi = q.features.data() + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < nk; ++j) {
      const float* kj = k.features.data() + static_cast<std::size_t>(j) * c;
      float dot = 0.0f;
      for (int p = 0; p < c; ++p) dot += qi[p] * kj[p];
      logits.at(i, j) = dot * scale;
    }
  }
  return softmax_rows(logits);
}

std::optional<Tensor> aggregate(const QuerySet& q, const KeySet& k, const AttentionParams& params) {
  auto weights = similarity_weights(q, k, params.scale);
  if (!weights) return std::nullopt;
  const int c = q.features.dim(1);
  if (params.transform.rank() != 2 || params.transform.dim(0) != c || params.transform.dim(1) != c)
    throw ConfigError("attention transform must be [C,C]");

  // values = K * W^T, so row j holds W k_j.
  const int nk = k.count();
  Tensor values({nk, c});
  for (int j = 0; j < nk; ++j) {
    const float* kj = k.features.data() + static_cast<std::size_t>(j) * c;
    float* vj = values.data() + static_cast<std::size_t>(j) * c;
    for (int r = 0; r < c; ++r) {
      const float* wr = params.transform.data() + static_cast<std::size_t>(r) * c;
      float acc = 0.0f;
      for (int p = 0; p < c; ++p) acc += wr[p] * kj[p];
      vj[r] = acc;
    }
  }

  Tensor out = matmul(*weights, values);
  add_inplace(out, q.features);
  return out;
}

std::uint64_t attention_op_count(std::uint64_t n_q, std::uint64_t n_k, std::uint64_t c) {
  if (n_q == 0) return 0;
  return n_q * n_k * c + n_k * c * c + n_q * n_k * c;
}

std::uint64_t attention_quadratic_ops(std::uint64_t n_q, std::uint64_t n_k, std::uint64_t c) {
  if (n_q == 0) return 0;
  return 2 * n_q * n_k * c;
}

}  // namespace vod
