#include "vod/spn.hpp"

#include <sstream>

namespace vod {

SkipSchedule SkipSchedule::initial(int interval_t) {
  if (interval_t < 0) throw ConfigError("interval T must be non-negative");
  SkipSchedule s;
  s.interval_t = interval_t;
  s.frames_since_full = interval_t;  // first frame is always a full detection
  s.fallback_all = true;
  return s;
}

bool is_full_frame(const SkipSchedule& state) {
  return state.fallback_all || state.frames_since_full >= state.interval_t;
}

std::set<int> plan_frame(const SkipSchedule& state, int num_levels) {
  if (is_full_frame(state)) {
    std::set<int> all;
    for (int i = 0; i < num_levels; ++i) all.insert(i);
    return all;
  }
  return state.active_levels;
}

SkipSchedule update(const SkipSchedule& state, const std::vector<Detection>& detections,
                    bool was_full, float validate_threshold) {
  SkipSchedule next = state;
  if (was_full) {
    next.active_levels.clear();
    for (const auto& d : detections)
      if (d.score > validate_threshold) next.active_levels.insert(d.level_index);
    next.fallback_all = next.active_levels.empty();
    next.frames_since_full = 0;
  } else {
    next.frames_since_full = std::min(next.frames_since_full + 1, next.interval_t);
  }
  return next;
}

std::string schedule_line(const ScheduleEntry& e) {
  std::ostringstream os;
  os << "schedule frame=" << e.frame_index << " kind=" << (e.full ? "full" : "partial")
     << " active=";
  bool first = true;
  for (int li : e.active_levels) {
    if (!first) os << ",";
    os << li;
    first = false;
  }
  return os.str();
}

}  // namespace vod
