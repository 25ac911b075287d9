#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "tlx/error.hpp"

namespace tlx {

enum class AppKnowledge { high, medium, low };
enum class DeviceExperience { high, low_none };
enum class TaskExperience { high, low };

/// Cohort attributes collected from each participant.
struct UserProfile {
  AppKnowledge app_knowledge = AppKnowledge::low;
  DeviceExperience device_experience = DeviceExperience::low_none;
  std::optional<TaskExperience> task_experience;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

// Enumerator order doubles as report order (high first).
inline constexpr std::array kAppKnowledgeLevels{AppKnowledge::high, AppKnowledge::medium,
                                                AppKnowledge::low};
inline constexpr std::array kDeviceExperienceLevels{DeviceExperience::high,
                                                    DeviceExperience::low_none};

inline std::string_view to_string(AppKnowledge v) {
  switch (v) {
    case AppKnowledge::high: return "high";
    case AppKnowledge::medium: return "medium";
    case AppKnowledge::low: return "low";
  }
  return "low";
}

inline std::string_view to_string(DeviceExperience v) {
  return v == DeviceExperience::high ? "high" : "low_none";
}

inline std::string_view to_string(TaskExperience v) {
  return v == TaskExperience::high ? "high" : "low";
}

inline AppKnowledge parse_app_knowledge(std::string_view s) {
  if (s == "high") return AppKnowledge::high;
  if (s == "medium") return AppKnowledge::medium;
  if (s == "low") return AppKnowledge::low;
  throw Error(ErrorKind::validation, "app_knowledge must be high, medium or low",
              {"app_knowledge"});
}

inline DeviceExperience parse_device_experience(std::string_view s) {
  if (s == "high") return DeviceExperience::high;
  if (s == "low_none") return DeviceExperience::low_none;
  throw Error(ErrorKind::validation, "device_experience must be high or low_none",
              {"device_experience"});
}

inline TaskExperience parse_task_experience(std::string_view s) {
  if (s == "high") return TaskExperience::high;
  if (s == "low") return TaskExperience::low;
  throw Error(ErrorKind::validation, "task_experience must be high or low", {"task_experience"});
}

}  // namespace tlx
