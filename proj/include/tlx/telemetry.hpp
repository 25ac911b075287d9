#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tlx/error.hpp"

namespace tlx {

using Millis = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Millis>;

enum class EventKind { click, gaze };

inline std::string_view to_string(EventKind k) { return k == EventKind::click ? "click" : "gaze"; }

/// One click, or one continuous gaze interval on a scene object.
struct InteractionEvent {
  std::string session_id;
  EventKind kind = EventKind::click;
  std::string object_id;
  Timestamp start{};
  std::optional<Timestamp> end;  // gaze only

  /// Clicks are instantaneous.
  Timestamp effective_end() const { return end.value_or(start); }
  Millis duration() const { return effective_end() - start; }

  friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

enum class EventSource { file, network };

struct EventBatch {
  std::vector<InteractionEvent> events;
  EventSource source = EventSource::file;
};

inline constexpr std::string_view kEventLogExtension = ".events.ndjson";

// ---------------------------------------------------------------------------
// Timestamps: exactly YYYY-MM-DDTHH:MM:SS.mmmZ

namespace detail {

inline bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

}  // namespace detail

inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  if (s.size() != 24) return std::nullopt;
  if (s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' ||
      s[19] != '.' || s[23] != 'Z') {
    return std::nullopt;
  }
  int y, mo, d, h, mi, sec, ms;
  if (!detail::read_digits(s, 0, 4, y) || !detail::read_digits(s, 5, 2, mo) ||
      !detail::read_digits(s, 8, 2, d) || !detail::read_digits(s, 11, 2, h) ||
      !detail::read_digits(s, 14, 2, mi) || !detail::read_digits(s, 17, 2, sec) ||
      !detail::read_digits(s, 20, 3, ms)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + Millis{ms};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  hh_mm_ss<Millis> tod{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()),
                static_cast<int>(tod.subseconds().count()));
  return buf;
}

// ---------------------------------------------------------------------------
// Line format

namespace detail {

struct KeyAt {
  std::string key;
  std::size_t offset;
};

/// Top-level keys of a well-formed JSON object, with the byte offset of each
/// key's opening quote, in line order.
inline std::vector<KeyAt> top_level_keys(std::string_view line) {
  std::vector<KeyAt> keys;
  int depth = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
    } else if (c == '"') {
      const auto open = i;
      for (++i; i < line.size() && line[i] != '"'; ++i) {
        if (line[i] == '\\') ++i;
      }
      auto next = line.find_first_not_of(" \t\r", i + 1);
      if (depth == 1 && next != std::string_view::npos && line[next] == ':') {
        const auto token = line.substr(open, i - open + 1);
        keys.push_back({nlohmann::json::parse(token).get<std::string>(), open});
      }
    }
  }
  return keys;
}

inline std::size_t key_offset(std::string_view line, std::string_view key) {
  for (const auto& k : top_level_keys(line)) {
    if (k.key == key) return k.offset;
  }
  return 0;
}

inline void validation_failure(std::string_view field, const std::string& why) {
  throw Error(ErrorKind::validation, "field '" + std::string(field) + "': " + why,
              {std::string(field)});
}

}  // namespace detail

/// Parses one event record. Unknown, duplicated, or mistyped fields and
/// non-canonical timestamps are parse errors carrying a byte offset;
/// well-formed records that break an event invariant are validation errors
/// whose single detail entry names the field.
inline InteractionEvent parse_event_line(std::string_view line) {
  using nlohmann::json;
  if (const auto nl = line.find('\n'); nl != std::string_view::npos) {
    throw ParseError("embedded newline", nl);
  }

  static const std::set<std::string, std::less<>> kFields{"session_id", "kind", "object_id",
                                                          "start", "end"};
  json doc;
  try {
    doc = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
  }
  if (!doc.is_object()) throw ParseError("record is not a JSON object", 0);
  std::set<std::string, std::less<>> seen;
  for (const auto& k : detail::top_level_keys(line)) {
    if (!kFields.contains(k.key)) throw ParseError("unknown field '" + k.key + "'", k.offset);
    if (!seen.insert(k.key).second) throw ParseError("duplicate field '" + k.key + "'", k.offset);
  }

  auto string_field = [&](std::string_view name) -> std::optional<std::string> {
    const auto it = doc.find(name);
    if (it == doc.end()) return std::nullopt;
    if (!it->is_string()) {
      throw ParseError("field '" + std::string(name) + "' must be a string",
                       detail::key_offset(line, name));
    }
    return it->get<std::string>();
  };
  auto timestamp_field = [&](std::string_view name) -> std::optional<Timestamp> {
    const auto text = string_field(name);
    if (!text) return std::nullopt;
    const auto t = parse_timestamp(*text);
    if (!t) {
      throw ParseError("field '" + std::string(name) +
                           "' is not a UTC timestamp of the form YYYY-MM-DDTHH:MM:SS.mmmZ",
                       detail::key_offset(line, name));
    }
    return t;
  };

  InteractionEvent e;
  const auto session = string_field("session_id");
  const auto kind = string_field("kind");
  const auto object = string_field("object_id");
  const auto start = timestamp_field("start");
  const auto end = timestamp_field("end");

  if (!session) detail::validation_failure("session_id", "required");
  if (session->empty()) detail::validation_failure("session_id", "must not be empty");
  if (!kind) detail::validation_failure("kind", "required");
  if (*kind == "click") {
    e.kind = EventKind::click;
  } else if (*kind == "gaze") {
    e.kind = EventKind::gaze;
  } else {
    detail::validation_failure("kind", "must be \"click\" or \"gaze\"");
  }
  if (!object) detail::validation_failure("object_id", "required");
  if (object->empty()) detail::validation_failure("object_id", "must not be empty");
  if (!start) detail::validation_failure("start", "required");
  if (e.kind == EventKind::click && end) detail::validation_failure("end", "not allowed on click events");
  if (e.kind == EventKind::gaze && !end) detail::validation_failure("end", "required on gaze events");
  if (end && *end < *start) detail::validation_failure("end", "precedes start");

  e.session_id = *session;
  e.object_id = *object;
  e.start = *start;
  e.end = end;
  return e;
}

/// Canonical one-line form, without trailing newline.
inline std::string serialize_event(const InteractionEvent& e) {
  nlohmann::ordered_json doc;
  doc["session_id"] = e.session_id;
  doc["kind"] = to_string(e.kind);
  doc["object_id"] = e.object_id;
  doc["start"] = format_timestamp(e.start);
  if (e.end) doc["end"] = format_timestamp(*e.end);
  return doc.dump();
}

/// Parses a newline-delimited log. Blank lines are skipped. Every bad line
/// is reported (1-based line numbers) before anything is returned.
inline EventBatch parse_event_log(std::string_view text, EventSource source = EventSource::file) {
  EventBatch batch;
  batch.source = source;
  std::vector<std::string> problems;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      batch.events.push_back(parse_event_line(line));
    } catch (const ParseError& e) {
      problems.push_back("line " + std::to_string(line_no) + ", byte " + std::to_string(e.offset()) +
                         ": " + e.what());
    } catch (const Error& e) {
      problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    auto msg = "event log rejected: " + problems.front();
    if (problems.size() > 1) msg += " (and " + std::to_string(problems.size() - 1) + " more)";
    throw Error(ErrorKind::validation, std::move(msg), std::move(problems));
  }
  return batch;
}

}  // namespace tlx
