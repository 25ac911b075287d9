#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tlx/error.hpp"

namespace tlx {

enum class DimensionGroup { task, technology };
enum class Variant { classic6, xr11 };

struct Dimension {
  std::string_view id;
  std::string_view label;
  std::string_view prompt;
  DimensionGroup group;
  // Scale endpoint labels shown by the rating UI.
  std::string_view low_label = "Low";
  std::string_view high_label = "High";
};

namespace detail {

inline constexpr std::array<Dimension, 11> kAllDimensions{{
    {"mental_demand", "Mental demand",
     "How much mental activity was necessary? (e.g.: thinking, deciding, calculating, remembering, etc.)",
     DimensionGroup::task},
    {"physical_demand", "Physical demand",
     "How much physical activity was required? (e.g. pushing, pulling, turning, etc.)",
     DimensionGroup::task},
    {"temporal_demand", "Temporal demand",
     "How much time pressure did you feel? Was the pace slow and leisurely or fast and frantic?",
     DimensionGroup::task},
    {"effort", "Effort",
     "To what extent did you have to work (physically or mentally) to achieve your level of results?",
     DimensionGroup::task},
    {"performance", "Performance",
     "To what extent do you think you have succeeded in the objectives established by the "
     "researchers (or by yourself)?",
     DimensionGroup::task, "Good", "Poor"},
    {"frustration", "Frustration level",
     "During the task, to what extent did you feel insecure, discouraged, irritated, tense or "
     "worried or, on the contrary, did you feel secure, content, relaxed and satisfied?",
     DimensionGroup::task},
    {"physical_comfort", "Physical comfort",
     "Are the glasses comfortable to wear or do you experience any physical discomfort? (e.g. "
     "headache, excessive weight, etc.)",
     DimensionGroup::technology},
    {"visual_comfort", "Visual comfort",
     "Is it comfortable to see the objects projected by the glasses or do you experience any "
     "discomfort? (e.g., eye discomfort or irritation, field of view, image sharpness, etc.)",
     DimensionGroup::technology},
    {"general_comfort", "General comfort",
     "Overall, are the glasses comfortable to wear or do you experience any discomfort? (e.g., "
     "dizziness, disorientation, loss of balance, etc.)",
     DimensionGroup::technology},
    {"ease_of_use", "Ease of use",
     "Is the application easy to use? Is it intuitive? Are the menus well understood? Are the "
     "necessary items found quickly?",
     DimensionGroup::technology},
    {"app_usability", "Application usability",
     "Do you consider that the application is useful as a substitute for paper blueprints?",
     DimensionGroup::technology},
}};

}  // namespace detail

/// Ordered set of workload subscales for one questionnaire variant.
/// The six task dimensions always come first.
class DimensionSet {
 public:
  explicit DimensionSet(Variant variant)
      : variant_(variant), size_(variant == Variant::classic6 ? 6 : 11) {}

  Variant variant() const noexcept { return variant_; }
  std::size_t size() const noexcept { return size_; }
  const Dimension* begin() const noexcept { return detail::kAllDimensions.data(); }
  const Dimension* end() const noexcept { return detail::kAllDimensions.data() + size_; }
  const Dimension& operator[](std::size_t i) const { return detail::kAllDimensions.at(i); }

  std::optional<std::size_t> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < size_; ++i) {
      if (detail::kAllDimensions[i].id == id) return i;
    }
    return std::nullopt;
  }

  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& d : *this) out.emplace_back(d.id);
    return out;
  }

  std::vector<std::string> ids(DimensionGroup group) const {
    std::vector<std::string> out;
    for (const auto& d : *this) {
      if (d.group == group) out.emplace_back(d.id);
    }
    return out;
  }

  friend bool operator==(const DimensionSet& a, const DimensionSet& b) {
    return a.variant_ == b.variant_;
  }

 private:
  Variant variant_;
  std::size_t size_;
};

inline std::string_view to_string(Variant v) {
  return v == Variant::classic6 ? "classic6" : "xr11";
}

inline std::string_view to_string(DimensionGroup g) {
  return g == DimensionGroup::task ? "task" : "technology";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "classic6") return Variant::classic6;
  if (s == "xr11") return Variant::xr11;
  throw Error(ErrorKind::validation, "unknown dimension set '" + std::string(s) + "'");
}

}  // namespace tlx
