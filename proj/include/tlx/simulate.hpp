#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "tlx/error.hpp"
#include "tlx/json_io.hpp"
#include "tlx/numeric.hpp"
#include "tlx/profile.hpp"
#include "tlx/telemetry.hpp"

namespace tlx {

/// Multipliers applied on top of the base behaviour for one profile level.
struct BehaviorMultipliers {
  double clicks_rate = 1.0;
  double gazes_rate = 1.0;
  double focus_probability = 1.0;
};

/// Synthetic participants for exercising the telemetry and cohort tooling.
/// The generated behaviour is a test instrument, not a model of real users.
struct SimulationSpec {
  int users = 23;
  std::array<double, 3> app_knowledge_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};  // high, medium, low
  std::array<double, 2> device_experience_mix{0.5, 0.5};              // high, low_none
  double min_minutes = 5.0;
  double max_minutes = 15.0;
  double clicks_per_minute = 4.0;
  double gazes_per_minute = 12.0;
  double focus_probability = 0.4;
  std::array<BehaviorMultipliers, 3> app_knowledge_behavior{
      BehaviorMultipliers{1.5, 1.3, 1.4}, BehaviorMultipliers{1.0, 1.0, 1.0},
      BehaviorMultipliers{0.6, 0.8, 0.7}};
  std::array<BehaviorMultipliers, 2> device_experience_behavior{
      BehaviorMultipliers{1.3, 1.1, 1.2}, BehaviorMultipliers{0.8, 0.9, 0.85}};
  int objects = 40;
  std::uint64_t seed = 42;

  void validate() const {
    std::vector<std::string> problems;
    auto check_mix = [&](const auto& mix, const char* name) {
      double sum = 0;
      for (const double p : mix) {
        if (!(p >= 0)) problems.push_back(std::string(name) + " proportions must be non-negative");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) problems.push_back(std::string(name) + " proportions must sum to 1");
    };
    auto check_behavior = [&](const BehaviorMultipliers& b) {
      if (!(b.clicks_rate >= 0) || !(b.gazes_rate >= 0) || !(b.focus_probability >= 0)) {
        problems.push_back("behaviour multipliers must be non-negative");
      }
    };
    if (users < 0) problems.push_back("users must be non-negative");
    check_mix(app_knowledge_mix, "app_knowledge");
    check_mix(device_experience_mix, "device_experience");
    if (!(min_minutes > 0)) problems.push_back("min_minutes must be positive");
    if (!(min_minutes <= max_minutes)) problems.push_back("min_minutes must not exceed max_minutes");
    if (!(clicks_per_minute >= 0) || !(gazes_per_minute >= 0)) problems.push_back("rates must be non-negative");
    if (!(focus_probability >= 0 && focus_probability <= 1)) problems.push_back("focus_probability must be in [0,1]");
    for (const auto& b : app_knowledge_behavior) check_behavior(b);
    for (const auto& b : device_experience_behavior) check_behavior(b);
    if (objects < 1) problems.push_back("objects must be at least 1");
    if (!problems.empty()) {
      throw Error(ErrorKind::validation, "invalid simulation spec: " + problems.front(), problems);
    }
  }
};

struct SimulatedSession {
  std::string session_id;
  std::string user_id;
  UserProfile profile;
  std::vector<InteractionEvent> events;
};

namespace detail {

template <std::size_t N>
std::size_t pick(const std::array<double, N>& mix, std::mt19937_64& rng) {
  const double u = uniform_unit(rng);
  double acc = 0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += mix[i];
    if (u < acc) return i;
  }
  return N - 1;
}

inline BehaviorMultipliers behavior_from_json(const Json& j, BehaviorMultipliers b) {
  b.clicks_rate = j.value("clicks_rate", b.clicks_rate);
  b.gazes_rate = j.value("gazes_rate", b.gazes_rate);
  b.focus_probability = j.value("focus_probability", b.focus_probability);
  return b;
}

inline std::string numbered(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix, n);
  return buf;
}

}  // namespace detail

/// Reads a spec document; every key is optional and falls back to the default.
///   {"users": 23, "seed": 42, "min_minutes": 5, "max_minutes": 15,
///    "clicks_per_minute": 4, "gazes_per_minute": 12, "focus_probability": 0.4, "objects": 40,
///    "app_knowledge_mix": {"high": .., "medium": .., "low": ..},
///    "device_experience_mix": {"high": .., "low_none": ..},
///    "app_knowledge_behavior": {"high": {"clicks_rate": .., ...}, ...},
///    "device_experience_behavior": {"high": {...}, "low_none": {...}}}
inline SimulationSpec simulation_spec_from_json(const Json& j) {
  SimulationSpec s;
  if (!j.is_object()) throw Error(ErrorKind::validation, "simulation spec must be a JSON object");
  try {
    s.users = j.value("users", s.users);
    s.seed = j.value("seed", s.seed);
    s.min_minutes = j.value("min_minutes", s.min_minutes);
    s.max_minutes = j.value("max_minutes", s.max_minutes);
    s.clicks_per_minute = j.value("clicks_per_minute", s.clicks_per_minute);
    s.gazes_per_minute = j.value("gazes_per_minute", s.gazes_per_minute);
    s.focus_probability = j.value("focus_probability", s.focus_probability);
    s.objects = j.value("objects", s.objects);
    if (const auto it = j.find("app_knowledge_mix"); it != j.end()) {
      for (std::size_t i = 0; i < 3; ++i) {
        s.app_knowledge_mix[i] = it->value(std::string(to_string(kAppKnowledgeLevels[i])), 0.0);
      }
    }
    if (const auto it = j.find("device_experience_mix"); it != j.end()) {
      for (std::size_t i = 0; i < 2; ++i) {
        s.device_experience_mix[i] = it->value(std::string(to_string(kDeviceExperienceLevels[i])), 0.0);
      }
    }
    if (const auto it = j.find("app_knowledge_behavior"); it != j.end()) {
      for (std::size_t i = 0; i < 3; ++i) {
        const auto key = std::string(to_string(kAppKnowledgeLevels[i]));
        if (it->contains(key)) {
          s.app_knowledge_behavior[i] = detail::behavior_from_json((*it)[key], s.app_knowledge_behavior[i]);
        }
      }
    }
    if (const auto it = j.find("device_experience_behavior"); it != j.end()) {
      for (std::size_t i = 0; i < 2; ++i) {
        const auto key = std::string(to_string(kDeviceExperienceLevels[i]));
        if (it->contains(key)) {
          s.device_experience_behavior[i] =
              detail::behavior_from_json((*it)[key], s.device_experience_behavior[i]);
        }
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::validation, std::string("invalid simulation spec: ") + e.what());
  }
  return s;
}

/// Deterministic in `spec` (including its seed). Each session opens with a
/// click at its start and closes with a click at its end, so usage time equals
/// the drawn duration.
inline std::vector<SimulatedSession> simulate_sessions(const SimulationSpec& spec) {
  using namespace std::chrono;
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Timestamp base = sys_days{year{2024} / 3 / 1} + hours{8};

  std::vector<SimulatedSession> out;
  out.reserve(static_cast<std::size_t>(spec.users));
  for (int i = 1; i <= spec.users; ++i) {
    SimulatedSession s;
    s.session_id = detail::numbered("sim-", i);
    s.user_id = detail::numbered("user-", i);
    const auto ak = detail::pick(spec.app_knowledge_mix, rng);
    const auto dx = detail::pick(spec.device_experience_mix, rng);
    s.profile.app_knowledge = kAppKnowledgeLevels[ak];
    s.profile.device_experience = kDeviceExperienceLevels[dx];
    const auto& ab = spec.app_knowledge_behavior[ak];
    const auto& db = spec.device_experience_behavior[dx];

    const double minutes = spec.min_minutes + (spec.max_minutes - spec.min_minutes) * uniform_unit(rng);
    const auto length = Millis{static_cast<std::int64_t>(std::llround(minutes * 60'000.0))};
    const Timestamp start = base + hours{i};
    const Timestamp finish = start + length;

    const double click_rate = spec.clicks_per_minute * ab.clicks_rate * db.clicks_rate;
    const double gaze_rate = spec.gazes_per_minute * ab.gazes_rate * db.gazes_rate;
    const double focus_p =
        std::clamp(spec.focus_probability * ab.focus_probability * db.focus_probability, 0.0, 1.0);

    auto object = [&] {
      return detail::numbered("obj_", static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(spec.objects))) + 1);
    };
    // Exponential inter-arrival times, in milliseconds.
    auto arrivals = [&](double per_minute, auto&& emit) {
      if (per_minute <= 0) return;
      double t = 0;
      const double total = static_cast<double>(length.count());
      while (true) {
        t += -std::log(1.0 - uniform_unit(rng)) * 60'000.0 / per_minute;
        if (t >= total) break;
        emit(start + Millis{static_cast<std::int64_t>(t)});
      }
    };

    s.events.push_back({s.session_id, EventKind::click, "app_start", start, std::nullopt});
    arrivals(click_rate, [&](Timestamp at) {
      s.events.push_back({s.session_id, EventKind::click, object(), at, std::nullopt});
    });
    arrivals(gaze_rate, [&](Timestamp at) {
      const bool focus = uniform_unit(rng) < focus_p;
      const auto dwell = focus ? 1000 + static_cast<std::int64_t>(uniform_below(rng, 3001))
                               : 100 + static_cast<std::int64_t>(uniform_below(rng, 900));
      const auto end = std::min(at + Millis{dwell}, finish);
      s.events.push_back({s.session_id, EventKind::gaze, object(), at, end});
    });
    s.events.push_back({s.session_id, EventKind::click, "app_exit", finish, std::nullopt});
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    out.push_back(std::move(s));
  }
  return out;
}

inline constexpr std::string_view kParticipantsCsvHeader =
    "session_id,user_id,app_knowledge,device_experience";

}  // namespace tlx
