#include <doctest.h>

#include "vod/spn.hpp"

using namespace vod;

namespace {

Detection det(float score, int level) {
  Detection d;
  d.x1 = 0;
  d.y1 = 0;
  d.x2 = 10;
  d.y2 = 10;
  d.score = score;
  d.level_index = level;
  return d;
}

}  // namespace

TEST_CASE("initial schedule runs a full frame first") {
  SkipSchedule s = SkipSchedule::initial(7);
  CHECK(is_full_frame(s));
  CHECK(plan_frame(s, 3) == std::set<int>{0, 1, 2});
}

TEST_CASE("T=0 degenerates to full frames everywhere") {
  SkipSchedule s = SkipSchedule::initial(0);
  for (int t = 0; t < 5; ++t) {
    CHECK(is_full_frame(s));
    s = update(s, {det(0.9f, 1)}, true);
  }
}

TEST_CASE("full frames land at multiples of T+1") {
  const int T = 7;
  SkipSchedule s = SkipSchedule::initial(T);
  std::vector<int> full_frames;
  for (int t = 0; t < 32; ++t) {
    const bool full = is_full_frame(s);
    if (full) full_frames.push_back(t);
    s = update(s, {det(0.9f, 0)}, full);
  }
  CHECK(full_frames == std::vector<int>{0, 8, 16, 24});
}

TEST_CASE("partial frames run only the levels of validated candidates") {
  SkipSchedule s = SkipSchedule::initial(3);
  REQUIRE(is_full_frame(s));
  s = update(s, {det(0.9f, 0), det(0.7f, 2), det(0.4f, 1)}, true);
  CHECK_FALSE(is_full_frame(s));
  CHECK(plan_frame(s, 3) == std::set<int>{0, 2});  // the 0.4 candidate does not validate

  // partial updates keep the active set frozen until the next full frame
  s = update(s, {det(0.9f, 1)}, false);
  CHECK(plan_frame(s, 3) == std::set<int>{0, 2});
}

TEST_CASE("empty validated set on a full frame fails open") {
  SkipSchedule s = SkipSchedule::initial(4);
  s = update(s, {det(0.3f, 0)}, true);  // nothing validates
  CHECK(s.fallback_all);
  CHECK(is_full_frame(s));
  CHECK(plan_frame(s, 3) == std::set<int>{0, 1, 2});

  // a later full frame with validated boxes restores skipping
  s = update(s, {det(0.8f, 1)}, true);
  CHECK_FALSE(s.fallback_all);
  CHECK_FALSE(is_full_frame(s));
  CHECK(plan_frame(s, 3) == std::set<int>{1});
}

TEST_CASE("threshold boundary: exactly 0.5 does not validate") {
  SkipSchedule s = SkipSchedule::initial(4);
  s = update(s, {det(0.5f, 0)}, true);
  CHECK(s.fallback_all);
  s = update(s, {det(0.5000001f, 0)}, true);
  CHECK_FALSE(s.fallback_all);
}

TEST_CASE("duplicate levels collapse into one active entry") {
  SkipSchedule s = SkipSchedule::initial(5);
  s = update(s, {det(0.9f, 1), det(0.8f, 1), det(0.7f, 1)}, true);
  CHECK(s.active_levels == std::set<int>{1});
}

TEST_CASE("schedule_line audit format") {
  ScheduleEntry e;
  e.frame_index = 8;
  e.full = true;
  e.active_levels = {0, 1, 2};
  CHECK(schedule_line(e) == "schedule frame=8 kind=full active=0,1,2");

  ScheduleEntry p;
  p.frame_index = 9;
  p.full = false;
  p.active_levels = {2};
  CHECK(schedule_line(p) == "schedule frame=9 kind=partial active=2");
}
