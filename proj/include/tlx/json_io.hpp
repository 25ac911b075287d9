#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tlx/error.hpp"
#include "tlx/metrics.hpp"
#include "tlx/numeric.hpp"
#include "tlx/profile.hpp"
#include "tlx/scoring.hpp"

namespace tlx {

using Json = nlohmann::ordered_json;

// Fixed-decimal numbers travel through the document as binary nodes tagged
// with this subtype; dump_json() writes their text verbatim.
inline constexpr std::uint8_t kDecimalSubtype = 0xD2;

inline Json decimal(const std::string& text) {
  return Json::binary(std::vector<std::uint8_t>(text.begin(), text.end()), kDecimalSubtype);
}

inline Json fixed2(const Ratio& r) { return decimal(format_fixed2(r)); }

namespace detail {

inline void dump_into(std::string& out, const Json& j, int indent, int level) {
  const auto newline = [&](int lvl) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * lvl), ' ');
  };
  switch (j.type()) {
    case Json::value_t::binary: {
      const auto& bin = j.get_binary();
      if (!bin.has_subtype() || bin.subtype() != kDecimalSubtype) {
        throw Error(ErrorKind::internal, "binary JSON value cannot be rendered");
      }
      out.append(bin.begin(), bin.end());
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ',';
        first = false;
        newline(level + 1);
        dump_into(out, item, indent, level + 1);
      }
      newline(level);
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(level + 1);
        out += Json(key).dump();
        out += indent < 0 ? ":" : ": ";
        dump_into(out, value, indent, level + 1);
      }
      newline(level);
      out += '}';
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Like Json::dump(), but renders decimal() nodes as bare numbers.
inline std::string dump_json(const Json& j, int indent = -1) {
  std::string out;
  detail::dump_into(out, j, indent, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Domain values -> documents

inline Json to_json(const WorkloadScore& s) {
  Json j;
  j["mode"] = to_string(s.mode);
  j["raw_task"] = fixed2(s.raw_task);
  j["weighted_task"] = fixed2(s.weighted_task);
  j["weighted_technology"] = s.weighted_technology ? fixed2(*s.weighted_technology) : Json(nullptr);
  return j;
}

inline Json to_json(const SessionMetrics& m) {
  Json j;
  j["session_id"] = m.session_id;
  j["total_interactions"] = m.total_interactions;
  j["clicks"] = m.clicks;
  j["gazes"] = m.gazes;
  j["usage_time_ms"] = m.usage_time.count();
  j["clicks_per_minute"] = fixed2(m.clicks_rate());
  j["gazes_per_minute"] = fixed2(m.gazes_rate());
  j["focused_objects"] = m.focused_objects;
  return j;
}

inline Json to_json(const ObjectGazeSummary& s) {
  Json j;
  j["object_id"] = s.object_id;
  j["gaze_count"] = s.gaze_count;
  j["total_dwell_ms"] = s.total_dwell.count();
  j["longest_dwell_ms"] = s.longest_dwell.count();
  j["focused"] = s.focused;
  return j;
}

inline Json to_json(const UserProfile& p) {
  Json j;
  j["app_knowledge"] = to_string(p.app_knowledge);
  j["device_experience"] = to_string(p.device_experience);
  j["task_experience"] = p.task_experience ? Json(to_string(*p.task_experience)) : Json(nullptr);
  return j;
}

inline Json to_json(const PairwiseChoice& c) {
  Json j;
  j["pair"] = Json::array({c.pair.first, c.pair.second});
  j["chosen"] = c.chosen;
  return j;
}

inline Json to_json(const std::vector<PairwiseChoice>& choices) {
  Json j = Json::array();
  for (const auto& c : choices) j.push_back(to_json(c));
  return j;
}

inline Json to_json(const std::vector<DimensionPair>& pairs) {
  Json j = Json::array();
  for (const auto& [a, b] : pairs) j.push_back(Json::array({a, b}));
  return j;
}

inline Json to_json(const DimensionSet& dims) {
  Json j = Json::array();
  for (const auto& d : dims) {
    Json dj;
    dj["id"] = d.id;
    dj["label"] = d.label;
    dj["prompt"] = d.prompt;
    dj["group"] = to_string(d.group);
    dj["low_label"] = d.low_label;
    dj["high_label"] = d.high_label;
    j.push_back(std::move(dj));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Documents -> domain values. Structural problems are validation errors.

namespace detail {

inline const Json& member(const Json& j, const char* key) {
  if (!j.is_object()) throw Error(ErrorKind::validation, "expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorKind::validation, std::string("missing field '") + key + "'", {key});
  }
  return *it;
}

inline std::string string_member(const Json& j, const char* key) {
  const auto& v = member(j, key);
  if (!v.is_string()) {
    throw Error(ErrorKind::validation, std::string("field '") + key + "' must be a string", {key});
  }
  return v.get<std::string>();
}

}  // namespace detail

inline std::vector<PairwiseChoice> choices_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::validation, "choices must be an array", {"choices"});
  std::vector<PairwiseChoice> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    const auto& pair = detail::member(item, "pair");
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
      throw Error(ErrorKind::validation, "pair must be an array of two dimension ids", {"pair"});
    }
    out.push_back({{pair[0].get<std::string>(), pair[1].get<std::string>()},
                   detail::string_member(item, "chosen")});
  }
  return out;
}

inline RatingVector ratings_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::validation, "ratings must be an object", {"ratings"});
  RatingVector out;
  for (const auto& [id, value] : j.items()) {
    if (!value.is_number_integer()) {
      throw Error(ErrorKind::validation, "rating for '" + id + "' must be an integer", {id});
    }
    const auto v = value.get<std::int64_t>();
    if (v < 0 || v > kRatingMax) {
      throw Error(ErrorKind::validation,
                  "rating for '" + id + "' out of range: " + std::to_string(v), {id});
    }
    out[id] = static_cast<int>(v);
  }
  return out;
}

inline UserProfile profile_from_json(const Json& j) {
  UserProfile p;
  p.app_knowledge = parse_app_knowledge(detail::string_member(j, "app_knowledge"));
  p.device_experience = parse_device_experience(detail::string_member(j, "device_experience"));
  if (const auto it = j.find("task_experience"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw Error(ErrorKind::validation, "task_experience must be a string", {"task_experience"});
    }
    p.task_experience = parse_task_experience(it->get<std::string>());
  }
  return p;
}

inline Json parse_json_document(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
  }
}

/// Offline questionnaire response:
///   {"dimension_set": "xr11", "weighting_mode": "xr_grouped",
///    "choices": [{"pair": [a, b], "chosen": a}, ...], "ratings": {id: value, ...}}
/// `weighting_mode` may be omitted and defaults per dimension set.
struct QuestionnaireResponse {
  Variant variant = Variant::classic6;
  WeightingMode mode = WeightingMode::classic;
  std::vector<PairwiseChoice> choices;
  RatingVector ratings;
};

inline QuestionnaireResponse response_from_json(const Json& j) {
  QuestionnaireResponse r;
  r.variant = parse_variant(detail::string_member(j, "dimension_set"));
  r.mode = j.contains("weighting_mode")
               ? parse_weighting_mode(detail::string_member(j, "weighting_mode"))
               : default_mode(r.variant);
  r.choices = choices_from_json(detail::member(j, "choices"));
  r.ratings = ratings_from_json(detail::member(j, "ratings"));
  return r;
}

}  // namespace tlx
