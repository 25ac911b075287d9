#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tlx/error.hpp"
#include "tlx/numeric.hpp"
#include "tlx/telemetry.hpp"

namespace tlx {

inline constexpr Millis kDefaultFocusThreshold{1000};

/// Session-level usage indicators derived from an event log.
struct SessionMetrics {
  std::string session_id;
  std::int64_t total_interactions = 0;
  std::int64_t clicks = 0;
  std::int64_t gazes = 0;
  Millis usage_time{0};
  double clicks_per_minute = 0.0;
  double gazes_per_minute = 0.0;
  std::int64_t focused_objects = 0;

  // Exact per-minute rates; 0 for an instantaneous session.
  Ratio clicks_rate() const { return rate(clicks); }
  Ratio gazes_rate() const { return rate(gazes); }

  friend bool operator==(const SessionMetrics&, const SessionMetrics&) = default;

 private:
  Ratio rate(std::int64_t count) const {
    if (usage_time.count() <= 0) return {0, 1};
    return {count * 60'000, usage_time.count()};
  }
};

struct ObjectGazeSummary {
  std::string object_id;
  std::int64_t gaze_count = 0;
  Millis total_dwell{0};
  Millis longest_dwell{0};
  bool focused = false;

  friend bool operator==(const ObjectGazeSummary&, const ObjectGazeSummary&) = default;
};

namespace detail {

inline void require_single_session(std::span<const InteractionEvent> events) {
  if (events.empty()) throw Error(ErrorKind::empty_session, "no events");
  for (const auto& e : events) {
    if (e.session_id != events.front().session_id) {
      throw Error(ErrorKind::validation, "events from more than one session: '" +
                                             events.front().session_id + "' and '" +
                                             e.session_id + "'");
    }
  }
}

}  // namespace detail

/// Per-object gaze summaries, sorted by object id. An object is focused when
/// at least one single gaze interval lasts `threshold` or longer; cumulative
/// dwell is reported but does not count towards focus.
inline std::vector<ObjectGazeSummary> compute_focused_objects(
    std::span<const InteractionEvent> events, Millis threshold = kDefaultFocusThreshold) {
  detail::require_single_session(events);
  if (threshold <= Millis{0}) throw Error(ErrorKind::validation, "focus threshold must be positive");

  std::map<std::string, ObjectGazeSummary, std::less<>> by_object;
  for (const auto& e : events) {
    if (e.kind != EventKind::gaze) continue;
    auto& s = by_object[e.object_id];
    s.object_id = e.object_id;
    const auto d = e.duration();
    ++s.gaze_count;
    s.total_dwell += d;
    s.longest_dwell = std::max(s.longest_dwell, d);
  }
  std::vector<ObjectGazeSummary> out;
  out.reserve(by_object.size());
  for (auto& [id, s] : by_object) {
    s.focused = s.longest_dwell >= threshold;
    out.push_back(std::move(s));
  }
  return out;
}

/// Usage time spans the earliest start to the latest effective end; input
/// order does not matter.
inline SessionMetrics compute_session_metrics(std::span<const InteractionEvent> events,
                                              Millis threshold = kDefaultFocusThreshold) {
  detail::require_single_session(events);

  SessionMetrics m;
  m.session_id = events.front().session_id;
  Timestamp first = events.front().start;
  Timestamp last = events.front().effective_end();
  for (const auto& e : events) {
    (e.kind == EventKind::click ? m.clicks : m.gazes) += 1;
    first = std::min(first, e.start);
    last = std::max(last, e.effective_end());
  }
  m.total_interactions = m.clicks + m.gazes;
  m.usage_time = last - first;
  m.clicks_per_minute = m.clicks_rate().value();
  m.gazes_per_minute = m.gazes_rate().value();
  for (const auto& s : compute_focused_objects(events, threshold)) m.focused_objects += s.focused;
  return m;
}

}  // namespace tlx
