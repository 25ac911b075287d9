#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tlx/error.hpp"
#include "tlx/json_io.hpp"
#include "tlx/metrics.hpp"
#include "tlx/profile.hpp"

namespace tlx {

inline constexpr std::string_view kReportCsvHeader =
    "session_id,user_id,app_knowledge,device_experience,total_interactions,clicks,gazes,"
    "usage_time_ms,clicks_per_minute,gazes_per_minute,focused_objects";

/// One exported session: who it was and what the event log says.
struct ReportRow {
  std::string session_id;
  std::string user_id;
  UserProfile profile;
  SessionMetrics metrics;
};

enum class GroupBy { none, app_knowledge, device_experience };
enum class ReportFormat { csv, json };

inline GroupBy parse_group_by(std::string_view s) {
  if (s.empty() || s == "none") return GroupBy::none;
  if (s == "app_knowledge") return GroupBy::app_knowledge;
  if (s == "device_experience") return GroupBy::device_experience;
  throw Error(ErrorKind::validation,
              "unknown group key '" + std::string(s) + "' (expected app_knowledge or device_experience)",
              {"group_by"});
}

inline ReportFormat parse_report_format(std::string_view s) {
  if (s.empty() || s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw Error(ErrorKind::validation, "unknown report format '" + std::string(s) + "'", {"format"});
}

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// One CSV line (no terminator) in kReportCsvHeader column order.
inline std::string metrics_report(const ReportRow& row) {
  const auto& m = row.metrics;
  std::string out;
  out += csv_field(row.session_id) + ',';
  out += csv_field(row.user_id) + ',';
  out += std::string(to_string(row.profile.app_knowledge)) + ',';
  out += std::string(to_string(row.profile.device_experience)) + ',';
  out += std::to_string(m.total_interactions) + ',';
  out += std::to_string(m.clicks) + ',';
  out += std::to_string(m.gazes) + ',';
  out += std::to_string(m.usage_time.count()) + ',';
  out += format_fixed2(m.clicks_rate()) + ',';
  out += format_fixed2(m.gazes_rate()) + ',';
  out += std::to_string(m.focused_objects);
  return out;
}

struct CohortGroup {
  std::string key;  // empty when ungrouped
  std::vector<ReportRow> rows;
};

/// Rows partitioned into cohorts in fixed level order (high, medium, low or
/// high, low_none), each cohort sorted by session id. Empty cohorts are left out.
inline std::vector<CohortGroup> group_rows(std::vector<ReportRow> rows, GroupBy by) {
  std::sort(rows.begin(), rows.end(),
            [](const ReportRow& a, const ReportRow& b) { return a.session_id < b.session_id; });
  std::vector<CohortGroup> groups;
  auto take = [&](std::string key, auto&& pred) {
    CohortGroup g{std::move(key), {}};
    for (const auto& r : rows) {
      if (pred(r)) g.rows.push_back(r);
    }
    if (!g.rows.empty()) groups.push_back(std::move(g));
  };
  switch (by) {
    case GroupBy::none:
      take("", [](const ReportRow&) { return true; });
      break;
    case GroupBy::app_knowledge:
      for (const auto level : kAppKnowledgeLevels) {
        take(std::string(to_string(level)),
             [level](const ReportRow& r) { return r.profile.app_knowledge == level; });
      }
      break;
    case GroupBy::device_experience:
      for (const auto level : kDeviceExperienceLevels) {
        take(std::string(to_string(level)),
             [level](const ReportRow& r) { return r.profile.device_experience == level; });
      }
      break;
  }
  return groups;
}

inline std::string render_report_csv(std::span<const CohortGroup> groups) {
  std::string out(kReportCsvHeader);
  out += '\n';
  for (const auto& g : groups) {
    for (const auto& r : g.rows) {
      out += metrics_report(r);
      out += '\n';
    }
  }
  return out;
}

namespace detail {

inline Json mean_decimal(double sum, std::size_t n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", n == 0 ? 0.0 : sum / static_cast<double>(n));
  return decimal(buf);
}

}  // namespace detail

inline std::string render_report_json(std::span<const CohortGroup> groups, GroupBy by) {
  Json doc;
  switch (by) {
    case GroupBy::none: doc["group_by"] = nullptr; break;
    case GroupBy::app_knowledge: doc["group_by"] = "app_knowledge"; break;
    case GroupBy::device_experience: doc["group_by"] = "device_experience"; break;
  }
  doc["groups"] = Json::array();
  for (const auto& g : groups) {
    Json gj;
    gj["group"] = g.key.empty() ? Json(nullptr) : Json(g.key);
    gj["sessions"] = g.rows.size();
    double interactions = 0, clicks_pm = 0, gazes_pm = 0, usage = 0, focused = 0;
    Json rows = Json::array();
    for (const auto& r : g.rows) {
      interactions += static_cast<double>(r.metrics.total_interactions);
      clicks_pm += r.metrics.clicks_per_minute;
      gazes_pm += r.metrics.gazes_per_minute;
      usage += static_cast<double>(r.metrics.usage_time.count());
      focused += static_cast<double>(r.metrics.focused_objects);
      Json rj;
      rj["session_id"] = r.session_id;
      rj["user_id"] = r.user_id;
      rj["app_knowledge"] = to_string(r.profile.app_knowledge);
      rj["device_experience"] = to_string(r.profile.device_experience);
      auto mj = to_json(r.metrics);
      mj.erase("session_id");
      for (auto& [k, v] : mj.items()) rj[k] = v;
      rows.push_back(std::move(rj));
    }
    Json mean;
    mean["total_interactions"] = detail::mean_decimal(interactions, g.rows.size());
    mean["usage_time_ms"] = detail::mean_decimal(usage, g.rows.size());
    mean["clicks_per_minute"] = detail::mean_decimal(clicks_pm, g.rows.size());
    mean["gazes_per_minute"] = detail::mean_decimal(gazes_pm, g.rows.size());
    mean["focused_objects"] = detail::mean_decimal(focused, g.rows.size());
    gj["mean"] = std::move(mean);
    gj["rows"] = std::move(rows);
    doc["groups"].push_back(std::move(gj));
  }
  return dump_json(doc) + "\n";
}

inline std::string render_report(std::vector<ReportRow> rows, GroupBy by, ReportFormat format) {
  const auto groups = group_rows(std::move(rows), by);
  return format == ReportFormat::csv ? render_report_csv(groups) : render_report_json(groups, by);
}

}  // namespace tlx
