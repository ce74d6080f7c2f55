#include "vod/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vod {

namespace fs = std::filesystem;
using nlohmann::json;

void write_ppm(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) throw ConfigError("write_ppm expects [3,H,W]");
  const int h = image.dim(1), w = image.dim(2);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        row[x * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    f.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

Tensor read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0)
    throw ConfigError("unsupported PPM file: " + path);
  f.get();  // single whitespace after the header
  Tensor img({3, h, w});
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!f) throw ConfigError("truncated PPM file: " + path);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = row[x * 3 + c] / 255.0f;
  }
  return img;
}

void write_truth(const std::string& path, const GroundTruth& truth) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << "# frame class x1 y1 x2 y2\n";
  for (std::size_t t = 0; t < truth.frames.size(); ++t)
    for (const auto& b : truth.frames[t])
      f << t << " " << b.class_id << " " << b.x1 << " " << b.y1 << " " << b.x2 << " " << b.y2
        << "\n";
}

GroundTruth read_truth(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  GroundTruth truth;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    int frame = 0;
    Detection d;
    d.score = 1.0f;
    d.level_index = -1;
    if (!(is >> frame >> d.class_id >> d.x1 >> d.y1 >> d.x2 >> d.y2))
      throw ConfigError("bad truth record: " + line);
    if (frame < 0) throw ConfigError("negative frame index in " + path);
    if (truth.frames.size() <= static_cast<std::size_t>(frame))
      truth.frames.resize(frame + 1);
    truth.frames[frame].push_back(d);
  }
  return truth;
}

void write_detections(const std::string& path,
                      const std::vector<std::vector<Detection>>& dets) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << "# frame class score x1 y1 x2 y2 level\n";
  for (std::size_t t = 0; t < dets.size(); ++t)
    for (const auto& d : dets[t])
      f << t << " " << d.class_id << " " << d.score << " " << d.x1 << " " << d.y1 << " " << d.x2
        << " " << d.y2 << " " << d.level_index << "\n";
}

std::vector<std::vector<Detection>> read_detections(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  std::vector<std::vector<Detection>> dets;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    int frame = 0;
    Detection d;
    if (!(is >> frame >> d.class_id >> d.score >> d.x1 >> d.y1 >> d.x2 >> d.y2 >> d.level_index))
      throw ConfigError("bad detection record: " + line);
    if (dets.size() <= static_cast<std::size_t>(frame)) dets.resize(frame + 1);
    dets[frame].push_back(d);
  }
  return dets;
}

void save_weights(const std::string& path, const DetectorConfig& cfg,
                  const DetectorWeights& weights) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  const auto named = weights.named();
  f << "VODW1\n";
  f << "mode " << (cfg.weight_mode == WeightMode::Analytic ? "analytic" : "seeded-random") << "\n";
  f << "seed " << cfg.seed << "\n";
  f << "tensors " << named.size() << "\n";
  for (const auto& [name, t] : named) {
    f << name;
    for (int d : t->shape()) f << " " << d;
    f << "\n";
  }
  f << "DATA\n";
  for (const auto& [name, t] : named)
    f.write(reinterpret_cast<const char*>(t->data()), t->size() * sizeof(float));
}

DetectorWeights load_weights(const std::string& path, const DetectorConfig& cfg) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (line != "VODW1") throw ConfigError("not a weights file: " + path);

  // The canonical path regenerates from the recorded seed and checks shapes.
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::vector<std::pair<std::string, std::vector<int>>> entries;
  while (std::getline(f, line) && line != "DATA") {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "mode") {
      is >> mode;
    } else if (key == "seed") {
      is >> seed;
    } else if (key == "tensors") {
      is >> count;
    } else {
      std::vector<int> shape;
      int d;
      while (is >> d) shape.push_back(d);
      entries.emplace_back(key, shape);
    }
  }
  if (entries.size() != count) throw ConfigError("weights header inconsistent: " + path);
  if (seed != cfg.seed) throw ConfigError("weights seed does not match config");

  DetectorWeights expected =
      cfg.weight_mode == WeightMode::Analytic ? DetectorWeights{} : DetectorWeights::seeded(cfg);
  DetectorWeights result = expected;
  auto named = result.named();
  if (named.size() != entries.size()) throw ConfigError("weights layout does not match config");
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (named[i].first != entries[i].first || named[i].second->shape() != entries[i].second)
      throw ConfigError("weights tensor mismatch at " + entries[i].first);
    Tensor* t = const_cast<Tensor*>(named[i].second);
    f.read(reinterpret_cast<char*>(t->data()), t->size() * sizeof(float));
    if (!f) throw ConfigError("truncated weights file: " + path);
  }
  return result;
}

std::string masks_to_rle(const ForegroundMaskSet& masks) {
  std::ostringstream os;
  for (std::size_t li = 0; li < masks.masks.size(); ++li) {
    const Tensor& m = masks.masks[li];
    os << "level " << li << " " << m.dim(1) << " " << m.dim(2) << " ";
    int run_val = 0, run_len = 0;
    bool first = true;
    auto flush = [&] {
      if (run_len == 0) return;
      if (!first) os << " ";
      os << run_val << ":" << run_len;
      first = false;
    };
    for (std::size_t i = 0; i < m.size(); ++i) {
      const int v = m[i] > 0.5f ? 1 : 0;
      if (v == run_val) {
        ++run_len;
      } else {
        flush();
        run_val = v;
        run_len = 1;
      }
    }
    flush();
    os << "\n";
  }
  return os.str();
}

void write_sequence(const std::string& dir, const Sequence& seq) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    std::snprintf(name, sizeof(name), "frame_%05zu.ppm", t);
    write_ppm((fs::path(dir) / name).string(), seq.frames[t]);
  }
  write_truth((fs::path(dir) / "truth.txt").string(), seq.truth);
  json meta;
  meta["num_frames"] = seq.frames.size();
  meta["height"] = seq.frames.empty() ? 0 : seq.frames[0].dim(1);
  meta["width"] = seq.frames.empty() ? 0 : seq.frames[0].dim(2);
  std::ofstream mf(fs::path(dir) / "meta.json");
  mf << meta.dump(2) << "\n";
}

Sequence read_sequence(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "meta.json");
  if (!mf) throw ConfigError("missing meta.json in " + dir);
  json meta = json::parse(mf);
  const int n = meta.at("num_frames").get<int>();
  Sequence seq;
  char name[32];
  for (int t = 0; t < n; ++t) {
    std::snprintf(name, sizeof(name), "frame_%05d.ppm", t);
    seq.frames.push_back(read_ppm((fs::path(dir) / name).string()));
  }
  const auto truth_path = fs::path(dir) / "truth.txt";
  if (fs::exists(truth_path)) seq.truth = read_truth(truth_path.string());
  return seq;
}

}  // namespace vod
