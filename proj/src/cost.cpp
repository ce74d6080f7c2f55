#include "vod/cost.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "vod/attention.hpp"

namespace vod {

double CostReport::part_ms(const std::string& prefix) const {
  double t = 0.0;
  for (const auto& r : rows)
    if (r.part.rfind(prefix, 0) == 0) t += r.wall_ms;
  return t;
}

std::string CostReport::to_csv() const {
  std::ostringstream os;
  os << "part,wall_ms,macs,ratio\n";
  for (const auto& r : rows)
    os << r.part << "," << r.wall_ms << "," << r.mac_count << "," << r.ratio << "\n";
  os << "total," << total_ms << "," << total_macs << ",1.0\n";
  return os.str();
}

std::string CostReport::to_json() const {
  std::ostringstream os;
  os << "{\n  \"parts\": [\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << "    {\"part\": \"" << r.part << "\", \"wall_ms\": " << r.wall_ms
       << ", \"macs\": " << r.mac_count << ", \"peak_alloc\": " << r.peak_alloc
       << ", \"ratio\": " << r.ratio << "}" << (i + 1 < rows.size() ? "," : "") << "\n";
  }
  os << "  ],\n  \"total_ms\": " << total_ms << ",\n  \"total_macs\": " << total_macs << "\n}\n";
  return os.str();
}

static double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CostReport build_report(const std::vector<CostAccumulator>& runs) {
  CostReport rep;
  if (runs.empty()) return rep;
  std::vector<std::string> names;
  for (const auto& [name, _] : runs.front().parts) names.push_back(name);
  for (const auto& name : names) {
    std::vector<double> times;
    for (const auto& run : runs) {
      auto it = run.parts.find(name);
      times.push_back(it == run.parts.end() ? 0.0 : it->second.wall_ms);
    }
    CostReportRow row;
    row.part = name;
    row.wall_ms = median(times);
    const auto& p = runs.front().parts.at(name);
    row.mac_count = p.mac_count;
    row.peak_alloc = p.peak_alloc;
    if (row.wall_ms < 0.01) rep.warnings.push_back("part '" + name + "' below timer resolution");
    rep.rows.push_back(row);
  }
  for (const auto& r : rep.rows) {
    rep.total_ms += r.wall_ms;
    rep.total_macs += r.mac_count;
  }
  if (rep.total_ms > 0.0)
    for (auto& r : rep.rows) r.ratio = r.wall_ms / rep.total_ms;
  return rep;
}

std::int64_t nq_for_config(int input_h, int input_w, const std::vector<int>& strides) {
  if (input_h <= 0 || input_w <= 0) throw ConfigError("nq_for_config: sizes must be positive");
  std::int64_t total = 0;
  for (int s : strides) {
    if (s <= 0) throw ConfigError("nq_for_config: strides must be positive");
    const std::int64_t h = (input_h + s - 1) / s;
    const std::int64_t w = (input_w + s - 1) / s;
    total += h * w;
  }
  return total;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("loglog_slope needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

AttentionSweep attention_cost_sweep(const std::vector<std::int64_t>& nq_values, int channels,
                                    int nk_factor, bool measure_wall) {
  if (nq_values.size() < 3) throw ConfigError("attention sweep needs >= 3 N_q values");
  AttentionSweep sweep;
  std::mt19937_64 rng(7);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  AttentionParams params = AttentionParams::seeded(channels, 11, 0.1f);

  for (std::int64_t nq : nq_values) {
    AttentionSweepRow row;
    row.n_q = nq;
    row.n_k = nq * nk_factor;
    row.total_macs = attention_op_count(nq, row.n_k, channels);
    row.quadratic_macs = attention_quadratic_ops(nq, row.n_k, channels);
    if (measure_wall) {
      QuerySet q;
      q.features = Tensor({static_cast<int>(nq), channels});
      for (std::size_t i = 0; i < q.features.size(); ++i) q.features[i] = dist(rng);
      q.coords.resize(nq);
      KeySet k;
      k.features = Tensor({static_cast<int>(row.n_k), channels});
      for (std::size_t i = 0; i < k.features.size(); ++i) k.features[i] = dist(rng);
      k.provenance.resize(row.n_k);
      aggregate(q, k, params);  // warm
      const auto t0 = std::chrono::steady_clock::now();
      aggregate(q, k, params);
      row.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    sweep.rows.push_back(row);
  }

  std::vector<double> xs, mac_ys, wall_ys;
  for (const auto& r : sweep.rows) {
    xs.push_back(static_cast<double>(r.n_q));
    mac_ys.push_back(static_cast<double>(r.quadratic_macs));
    wall_ys.push_back(r.wall_ms);
  }
  sweep.mac_exponent = loglog_slope(xs, mac_ys);
  if (measure_wall) sweep.wall_exponent = loglog_slope(xs, wall_ys);
  return sweep;
}

}  // namespace vod
