#pragma once

// Test-only reference implementations and generators. Nothing here calls the
// scoring or metrics code it is used to check.

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tlx/scoring.hpp"
#include "tlx/telemetry.hpp"

namespace oracle {

inline const std::vector<std::string> kTaskIds{"mental_demand", "physical_demand", "temporal_demand",
                                               "effort",        "performance",     "frustration"};
inline const std::vector<std::string> kTechIds{"physical_comfort", "visual_comfort", "general_comfort",
                                               "ease_of_use", "app_usability"};

inline std::vector<std::string> all_ids() {
  auto ids = kTaskIds;
  ids.insert(ids.end(), kTechIds.begin(), kTechIds.end());
  return ids;
}

inline int naive_count(const std::vector<tlx::PairwiseChoice>& choices, const std::string& id) {
  int n = 0;
  for (const auto& c : choices) {
    if (c.chosen == id) ++n;
  }
  return n;
}

/// Σ w·r / Σ w with plain doubles over an explicit id list.
inline double naive_weighted(const std::vector<tlx::PairwiseChoice>& choices,
                             const tlx::RatingVector& ratings, const std::vector<std::string>& ids,
                             bool zero_if_no_weight = false) {
  double num = 0, den = 0;
  for (const auto& id : ids) {
    const int w = naive_count(choices, id);
    num += w * static_cast<double>(ratings.at(id));
    den += w;
  }
  if (den == 0 && zero_if_no_weight) return 0.0;
  return num / den;
}

inline double naive_mean(const tlx::RatingVector& ratings, const std::vector<std::string>& ids) {
  double sum = 0;
  for (const auto& id : ids) sum += ratings.at(id);
  return sum / static_cast<double>(ids.size());
}

struct NaiveScore {
  double raw_task = 0;
  double weighted_task = 0;
  bool has_technology = false;
  double weighted_technology = 0;
};

inline NaiveScore naive_score(const std::vector<tlx::PairwiseChoice>& choices,
                              const tlx::RatingVector& ratings, tlx::WeightingMode mode) {
  NaiveScore s;
  s.raw_task = naive_mean(ratings, kTaskIds);
  if (mode == tlx::WeightingMode::classic) {
    s.weighted_task = naive_weighted(choices, ratings, kTaskIds);
  } else if (mode == tlx::WeightingMode::xr_grouped) {
    s.weighted_task = naive_weighted(choices, ratings, kTaskIds);
    s.has_technology = true;
    s.weighted_technology = naive_weighted(choices, ratings, kTechIds);
  } else {
    s.weighted_task = naive_weighted(choices, ratings, all_ids());
    s.has_technology = true;
    s.weighted_technology = naive_weighted(choices, ratings, kTechIds, true);
  }
  return s;
}

/// Every pair within each scope, with a random winner and orientation,
/// returned in random order.
inline std::vector<tlx::PairwiseChoice> random_choices(tlx::WeightingMode mode, std::mt19937_64& rng) {
  std::vector<std::vector<std::string>> scopes;
  if (mode == tlx::WeightingMode::classic) scopes = {kTaskIds};
  if (mode == tlx::WeightingMode::xr_grouped) scopes = {kTaskIds, kTechIds};
  if (mode == tlx::WeightingMode::xr_full) scopes = {all_ids()};
  std::vector<tlx::PairwiseChoice> out;
  for (const auto& scope : scopes) {
    for (std::size_t i = 0; i < scope.size(); ++i) {
      for (std::size_t j = i + 1; j < scope.size(); ++j) {
        auto a = scope[i], b = scope[j];
        if (rng() & 1) std::swap(a, b);
        const auto chosen = (rng() & 2) ? a : b;
        out.push_back({{a, b}, chosen});
      }
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

inline tlx::RatingVector random_ratings(bool xr, std::mt19937_64& rng) {
  tlx::RatingVector r;
  for (const auto& id : xr ? all_ids() : kTaskIds) r[id] = static_cast<int>(rng() % 21) * 5;
  return r;
}

inline tlx::RatingVector uniform_ratings(bool xr, int value) {
  tlx::RatingVector r;
  for (const auto& id : xr ? all_ids() : kTaskIds) r[id] = value;
  return r;
}

// ---------------------------------------------------------------------------
// Events

struct BruteMetrics {
  std::int64_t clicks = 0;
  std::int64_t gazes = 0;
  std::int64_t usage_ms = 0;
  std::int64_t focused = 0;
};

/// Explicit scans; focus = some gaze interval on the object lasting >= threshold_ms.
inline BruteMetrics brute_metrics(const std::vector<tlx::InteractionEvent>& events,
                                  std::int64_t threshold_ms = 1000) {
  BruteMetrics m;
  std::int64_t lo = INT64_MAX, hi = INT64_MIN;
  for (const auto& e : events) {
    const auto s = e.start.time_since_epoch().count();
    const auto f = e.end ? e.end->time_since_epoch().count() : s;
    if (e.kind == tlx::EventKind::click) ++m.clicks; else ++m.gazes;
    if (s < lo) lo = s;
    if (f > hi) hi = f;
  }
  m.usage_ms = hi - lo;
  std::set<std::string> objects;
  for (const auto& e : events) {
    if (e.kind == tlx::EventKind::gaze) objects.insert(e.object_id);
  }
  for (const auto& obj : objects) {
    bool focused = false;
    for (const auto& e : events) {
      if (e.kind != tlx::EventKind::gaze || e.object_id != obj) continue;
      const auto d = e.end->time_since_epoch().count() - e.start.time_since_epoch().count();
      if (d >= threshold_ms) focused = true;
    }
    m.focused += focused;
  }
  return m;
}

inline std::string random_token(std::mt19937_64& rng, std::size_t max_len, bool allow_exotic) {
  static const std::string plain = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.";
  static const std::vector<std::string> exotic{"\"", "\\", ",", " ", "/", "\t", "é", "日", "\u0001", "🙂"};
  const std::size_t len = 1 + rng() % max_len;
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    if (allow_exotic && rng() % 8 == 0) {
      s += exotic[rng() % exotic.size()];
    } else {
      s += plain[rng() % plain.size()];
    }
  }
  return s;
}

inline tlx::Timestamp random_time(std::mt19937_64& rng) {
  // 1970 .. ~2286, within the four-digit-year range of the wire format.
  return tlx::Timestamp{tlx::Millis{static_cast<std::int64_t>(rng() % 10'000'000'000'000ULL)}};
}

inline tlx::InteractionEvent random_event(std::mt19937_64& rng, const std::string& session,
                                          bool exotic_strings) {
  tlx::InteractionEvent e;
  e.session_id = session;
  e.kind = (rng() & 1) ? tlx::EventKind::gaze : tlx::EventKind::click;
  e.object_id = random_token(rng, 24, exotic_strings);
  e.start = random_time(rng);
  if (e.kind == tlx::EventKind::gaze) e.end = e.start + tlx::Millis{static_cast<std::int64_t>(rng() % 10'000)};
  return e;
}

/// A session of up to `max_events` events over up to `max_objects` objects.
inline std::vector<tlx::InteractionEvent> random_session(std::mt19937_64& rng, std::size_t max_events,
                                                         int max_objects) {
  const std::size_t n = 1 + rng() % max_events;
  const int objects = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_objects));
  const std::int64_t span = 1 + static_cast<std::int64_t>(rng() % 3'600'000);
  const tlx::Timestamp base{tlx::Millis{1'709'280'000'000}};
  std::vector<tlx::InteractionEvent> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tlx::InteractionEvent e;
    e.session_id = "rand";
    e.kind = (rng() % 3 == 0) ? tlx::EventKind::click : tlx::EventKind::gaze;
    e.object_id = "obj" + std::to_string(rng() % static_cast<std::uint64_t>(objects));
    e.start = base + tlx::Millis{static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span))};
    if (e.kind == tlx::EventKind::gaze) {
      // Bias durations around the focus boundary.
      const std::int64_t d = (rng() % 4 == 0) ? 995 + static_cast<std::int64_t>(rng() % 10)
                                              : static_cast<std::int64_t>(rng() % 3000);
      e.end = e.start + tlx::Millis{d};
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace oracle
