#pragma once

#include <set>
#include <vector>

#include "vod/detector.hpp"

namespace vod {

// Feature-level skip state. Full detections run every interval_t + 1 frames;
// in between, only active_levels are executed. An empty validated set on a
// full frame fails open: every level runs until the next refresh.
struct SkipSchedule {
  int interval_t = 7;
  std::set<int> active_levels;
  int frames_since_full = 0;
  bool fallback_all = true;

  static SkipSchedule initial(int interval_t);
};

// True when the upcoming frame must run all levels and refresh the active set.
bool is_full_frame(const SkipSchedule& state);

// Levels to execute for the upcoming frame.
std::set<int> plan_frame(const SkipSchedule& state, int num_levels);

// State transition after a frame. `detections` are the frame's pre-NMS
// candidates; only validated ones (score > threshold) contribute levels.
SkipSchedule update(const SkipSchedule& state, const std::vector<Detection>& detections,
                    bool was_full, float validate_threshold = 0.5f);

struct ScheduleEntry {
  int frame_index = 0;
  bool full = true;
  std::set<int> active_levels;
};

// One audit line per frame: "schedule frame=<i> kind=full|partial active=a,b,c".
std::string schedule_line(const ScheduleEntry& e);

}  // namespace vod
