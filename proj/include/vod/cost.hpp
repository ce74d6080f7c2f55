#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vod {

struct PartCost {
  double wall_ms = 0.0;
  std::uint64_t mac_count = 0;
  std::uint64_t peak_alloc = 0;  // bytes, analytic estimate from tensor shapes
};

// Collects per-part timings and operation counts during a frame.
struct CostAccumulator {
  std::map<std::string, PartCost> parts;
  void add(const std::string& part, double wall_ms, std::uint64_t macs, std::uint64_t bytes) {
    auto& p = parts[part];
    p.wall_ms += wall_ms;
    p.mac_count += macs;
    if (bytes > p.peak_alloc) p.peak_alloc = bytes;
  }
};

struct CostReportRow {
  std::string part;
  double wall_ms = 0.0;
  std::uint64_t mac_count = 0;
  std::uint64_t peak_alloc = 0;
  double ratio = 0.0;  // share of total wall time
};

struct CostReport {
  std::vector<CostReportRow> rows;
  double total_ms = 0.0;
  std::uint64_t total_macs = 0;
  std::vector<std::string> warnings;

  double part_ms(const std::string& prefix) const;  // sum of rows whose name starts with prefix
  std::string to_csv() const;
  std::string to_json() const;
};

// Builds a report from per-part medians over repeated runs.
CostReport build_report(const std::vector<CostAccumulator>& runs);

// Total location count over all pyramid levels: sum of ceil(H/s)*ceil(W/s).
// Levels are produced by stacked stride-2 3x3 pad-1 convolutions, so each
// level dimension is the iterated ceiling, which equals ceil(size/stride).
std::int64_t nq_for_config(int input_h, int input_w, const std::vector<int>& strides);

struct AttentionSweepRow {
  std::int64_t n_q = 0;
  std::int64_t n_k = 0;
  std::uint64_t total_macs = 0;
  std::uint64_t quadratic_macs = 0;
  double wall_ms = 0.0;
};

struct AttentionSweep {
  std::vector<AttentionSweepRow> rows;
  double mac_exponent = 0.0;   // log-log fit on the quadratic terms
  double wall_exponent = 0.0;  // log-log fit on measured wall time
};

// Counts and times aggregation over the given N_q values with N_k = nk_factor * N_q.
AttentionSweep attention_cost_sweep(const std::vector<std::int64_t>& nq_values, int channels,
                                    int nk_factor, bool measure_wall);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vod
