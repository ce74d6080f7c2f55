#pragma once

#include <string>
#include <vector>

#include "vod/detector.hpp"
#include "vod/lpn.hpp"
#include "vod/synth.hpp"

namespace vod {

// Binary PPM (P6), values scaled to 8 bits.
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

// One record per box: "frame class x1 y1 x2 y2".
void write_truth(const std::string& path, const GroundTruth& truth);
GroundTruth read_truth(const std::string& path);

// One record per detection: "frame class score x1 y1 x2 y2 level".
void write_detections(const std::string& path,
                      const std::vector<std::vector<Detection>>& dets);
std::vector<std::vector<Detection>> read_detections(const std::string& path);

// Flat binary weights with a structured text header (mode, seed, shapes).
void save_weights(const std::string& path, const DetectorConfig& cfg,
                  const DetectorWeights& weights);
DetectorWeights load_weights(const std::string& path, const DetectorConfig& cfg);

// Run-length encoding of the per-level masks, for debugging.
std::string masks_to_rle(const ForegroundMaskSet& masks);

// Sequence directory: frame_%05d.ppm + truth.txt + meta.json.
void write_sequence(const std::string& dir, const Sequence& seq);
Sequence read_sequence(const std::string& dir);

}  // namespace vod
