#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <utility>
#include <vector>

#include "tlx/dimensions.hpp"
#include "tlx/error.hpp"
#include "tlx/json_io.hpp"
#include "tlx/metrics.hpp"
#include "tlx/profile.hpp"
#include "tlx/report.hpp"
#include "tlx/scoring.hpp"
#include "tlx/telemetry.hpp"

namespace tlx {

struct Study {
  std::string study_id;
  std::string name;
  Variant variant = Variant::classic6;
  WeightingMode weighting_mode = WeightingMode::classic;
  Timestamp created_at{};

  DimensionSet dimensions() const { return DimensionSet(variant); }

  friend bool operator==(const Study&, const Study&) = default;
};

/// Questionnaire progress. Values only ever increase.
enum class SessionState { created, weighting_done, rating_done, scored };

inline std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::created: return "created";
    case SessionState::weighting_done: return "weighting_done";
    case SessionState::rating_done: return "rating_done";
    case SessionState::scored: return "scored";
  }
  return "created";
}

inline SessionState parse_session_state(std::string_view s) {
  if (s == "created") return SessionState::created;
  if (s == "weighting_done") return SessionState::weighting_done;
  if (s == "rating_done") return SessionState::rating_done;
  if (s == "scored") return SessionState::scored;
  throw Error(ErrorKind::internal, "corrupt session state '" + std::string(s) + "'");
}

struct Session {
  std::string session_id;
  std::string study_id;
  std::string user_id;
  UserProfile profile;
  SessionState state = SessionState::created;
  Timestamp created_at{};

  friend bool operator==(const Session&, const Session&) = default;
};

/// Stored questionnaire answers. Choices are kept in canonical order.
struct Response {
  std::vector<PairwiseChoice> choices;
  std::optional<RatingVector> ratings;
  std::optional<WorkloadScore> score;

  friend bool operator==(const Response&, const Response&) = default;
};

struct AppendResult {
  std::size_t appended = 0;
  std::size_t deduplicated = 0;
};

inline Json to_json(const Study& s) {
  Json j;
  j["study_id"] = s.study_id;
  j["name"] = s.name;
  j["dimension_set"] = to_string(s.variant);
  j["weighting_mode"] = to_string(s.weighting_mode);
  j["created_at"] = format_timestamp(s.created_at);
  return j;
}

inline Json to_json(const Session& s) {
  Json j;
  j["session_id"] = s.session_id;
  j["study_id"] = s.study_id;
  j["user_id"] = s.user_id;
  j["profile"] = to_json(s.profile);
  j["state"] = to_string(s.state);
  j["created_at"] = format_timestamp(s.created_at);
  return j;
}

namespace detail {

inline Timestamp now_millis() {
  return std::chrono::floor<Millis>(std::chrono::system_clock::now());
}

inline Timestamp timestamp_member(const Json& j, const char* key) {
  const auto t = parse_timestamp(string_member(j, key));
  if (!t) throw Error(ErrorKind::internal, std::string("corrupt timestamp in '") + key + "'");
  return *t;
}

inline Json exact_json(const Ratio& r) { return Json::array({r.num, r.den}); }

inline Ratio exact_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::internal, "corrupt stored score");
  return {j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
}

inline Json score_record(const WorkloadScore& s) {
  Json j;
  j["mode"] = to_string(s.mode);
  j["raw_task"] = exact_json(s.raw_task);
  j["weighted_task"] = exact_json(s.weighted_task);
  j["weighted_technology"] =
      s.weighted_technology ? exact_json(*s.weighted_technology) : Json(nullptr);
  return j;
}

inline WorkloadScore score_from_record(const Json& j) {
  WorkloadScore s;
  s.mode = parse_weighting_mode(string_member(j, "mode"));
  s.raw_task = exact_from_json(member(j, "raw_task"));
  s.weighted_task = exact_from_json(member(j, "weighted_task"));
  if (const auto& t = member(j, "weighted_technology"); !t.is_null()) {
    s.weighted_technology = exact_from_json(t);
  }
  return s;
}

/// Choices sorted by unordered pair, so equal sets compare equal.
inline std::vector<PairwiseChoice> canonical_choices(std::vector<PairwiseChoice> choices) {
  for (auto& c : choices) c.pair = unordered(c.pair);
  std::sort(choices.begin(), choices.end(), [](const auto& a, const auto& b) {
    return std::tie(a.pair, a.chosen) < std::tie(b.pair, b.chosen);
  });
  return choices;
}

[[noreturn]] inline void io_failure(const std::filesystem::path& path, std::string_view what,
                                    int err = errno) {
  throw Error(ErrorKind::io, std::string(what) + " '" + path.string() + "': " + std::strerror(err),
              {path.string()});
}

class Fd {
 public:
  Fd(const std::filesystem::path& path, int flags, mode_t mode = 0644)
      : fd_(::open(path.c_str(), flags | O_CLOEXEC, mode)) {
    if (fd_ < 0) io_failure(path, "cannot open");
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }

 private:
  int fd_;
};

inline void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure(path, "write failed");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

inline void fsync_dir(const std::filesystem::path& dir) {
  Fd fd(dir, O_RDONLY | O_DIRECTORY);
  ::fsync(fd.get());
}

/// Write-to-temp, fsync, rename: readers see the old or the new file, never a mix.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
    write_all(fd.get(), content, tmp);
    if (::fsync(fd.get()) != 0) io_failure(tmp, "fsync failed");
  }
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_failure(path, "rename failed");
  fsync_dir(path.parent_path());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_failure(path, "cannot read", errno == 0 ? ENOENT : errno);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json read_json_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::internal, "corrupt document '" + path.string() + "': " + e.what());
  }
}

}  // namespace detail

/// File-backed persistence:
///
///   <root>/studies/<study_id>/study.json
///   <root>/sessions/<session_id>/session.json
///   <root>/sessions/<session_id>/response.json
///   <root>/sessions/<session_id>/events.ndjson
///   <root>/sessions/<session_id>/events.commit
///
/// JSON documents are replaced atomically. The event log only grows; the
/// commit file records how many of its bytes belong to completed batches, and
/// readers never look past that point. Mutations of one session are
/// serialized; the object may be shared between threads.
class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "studies", ec);
    if (!ec) std::filesystem::create_directories(root_ / "sessions", ec);
    if (ec) detail::io_failure(root_, "cannot initialise store", ec.value());
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  // -- studies --------------------------------------------------------------

  Study create_study(std::string name, Variant variant, WeightingMode mode) {
    require_compatible(variant, mode);
    Study s{"", std::move(name), variant, mode, detail::now_millis()};
    s.study_id = claim_directory(root_ / "studies");
    detail::atomic_write(study_path(s.study_id), dump_json(to_json(s), 2) + "\n");
    return s;
  }

  Study get_study(std::string_view study_id) const {
    const auto path = study_path(study_id);
    if (!valid_id(study_id) || !std::filesystem::exists(path)) {
      throw Error(ErrorKind::not_found, "unknown study '" + std::string(study_id) + "'");
    }
    const auto j = detail::read_json_file(path);
    Study s;
    s.study_id = detail::string_member(j, "study_id");
    s.name = detail::string_member(j, "name");
    s.variant = parse_variant(detail::string_member(j, "dimension_set"));
    s.weighting_mode = parse_weighting_mode(detail::string_member(j, "weighting_mode"));
    s.created_at = detail::timestamp_member(j, "created_at");
    return s;
  }

  std::vector<Study> list_studies() const {
    std::vector<Study> out;
    for (const auto& id : list_ids(root_ / "studies", "study.json")) out.push_back(get_study(id));
    return out;
  }

  // -- sessions -------------------------------------------------------------

  /// A caller may supply its own session id (e.g. one already stamped into
  /// headset event logs); otherwise a random token is allocated.
  Session create_session(std::string_view study_id, std::string user_id, UserProfile profile,
                         std::optional<std::string> session_id = std::nullopt) {
    get_study(study_id);
    Session s{"", std::string(study_id), std::move(user_id), profile, SessionState::created,
              detail::now_millis()};
    if (session_id) {
      if (!valid_id(*session_id)) {
        throw Error(ErrorKind::validation,
                    "session_id must be 1-64 characters of [a-z0-9_-]", {"session_id"});
      }
      const auto dir = root_ / "sessions" / *session_id;
      if (::mkdir(dir.c_str(), 0755) != 0) {
        if (errno == EEXIST) {
          throw Error(ErrorKind::conflict, "session '" + *session_id + "' already exists");
        }
        detail::io_failure(dir, "cannot create directory");
      }
      s.session_id = *session_id;
    } else {
      s.session_id = claim_directory(root_ / "sessions");
    }
    write_session(s);
    return s;
  }

  Session get_session(std::string_view session_id) const {
    const auto path = session_dir(session_id) / "session.json";
    if (!valid_id(session_id) || !std::filesystem::exists(path)) {
      throw Error(ErrorKind::not_found, "unknown session '" + std::string(session_id) + "'");
    }
    const auto j = detail::read_json_file(path);
    Session s;
    s.session_id = detail::string_member(j, "session_id");
    s.study_id = detail::string_member(j, "study_id");
    s.user_id = detail::string_member(j, "user_id");
    s.profile = profile_from_json(detail::member(j, "profile"));
    s.state = parse_session_state(detail::string_member(j, "state"));
    s.created_at = detail::timestamp_member(j, "created_at");
    return s;
  }

  /// Sessions sorted by id, optionally restricted to one study.
  std::vector<Session> list_sessions(std::optional<std::string_view> study_id = std::nullopt) const {
    if (study_id) get_study(*study_id);
    std::vector<Session> out;
    for (const auto& id : list_ids(root_ / "sessions", "session.json")) {
      auto s = get_session(id);
      if (!study_id || s.study_id == *study_id) out.push_back(std::move(s));
    }
    return out;
  }

  std::optional<Response> get_response(std::string_view session_id) const {
    get_session(session_id);
    return read_response(session_id);
  }

  // -- questionnaire ----------------------------------------------------------

  /// Phase 1. Resubmitting the same set (in any order) is a no-op; a different
  /// set after the phase is complete is a conflict.
  Session record_choices(std::string_view session_id, std::vector<PairwiseChoice> choices) {
    auto lock = lock_session(session_id);
    auto session = get_session(session_id);
    const auto study = get_study(session.study_id);
    tally_weights(choices, study.dimensions(), study.weighting_mode);
    auto canonical = detail::canonical_choices(std::move(choices));

    if (session.state != SessionState::created) {
      const auto stored = read_response(session_id);
      if (stored && stored->choices == canonical) return session;
      throw Error(ErrorKind::conflict, "session '" + session.session_id +
                                           "' already has different pairwise choices");
    }
    Response r;
    r.choices = std::move(canonical);
    write_response(session_id, r);
    session.state = SessionState::weighting_done;
    write_session(session);
    return session;
  }

  /// Phase 2 answers. Must follow record_choices.
  Session record_ratings(std::string_view session_id, const RatingVector& ratings) {
    auto lock = lock_session(session_id);
    auto session = get_session(session_id);
    const auto study = get_study(session.study_id);
    validate_ratings(ratings, study.dimensions());

    if (session.state == SessionState::created) {
      throw Error(ErrorKind::state, "session '" + session.session_id +
                                        "' has no pairwise choices yet; ratings come second");
    }
    auto response = read_response(session_id).value_or(Response{});
    if (session.state != SessionState::weighting_done) {
      if (response.ratings == ratings) return session;
      throw Error(ErrorKind::conflict,
                  "session '" + session.session_id + "' already has different ratings");
    }
    response.ratings = ratings;
    write_response(session_id, response);
    session.state = SessionState::rating_done;
    write_session(session);
    return session;
  }

  WorkloadScore score_and_persist(std::string_view session_id) {
    auto lock = lock_session(session_id);
    auto session = get_session(session_id);
    auto response = read_response(session_id);
    if (session.state == SessionState::scored && response && response->score) {
      return *response->score;
    }
    if (session.state != SessionState::rating_done || !response || !response->ratings) {
      throw Error(ErrorKind::state, "session '" + session.session_id + "' is in state " +
                                        std::string(to_string(session.state)) +
                                        "; both phases must be recorded before scoring");
    }
    const auto study = get_study(session.study_id);
    response->score = score_session(response->choices, *response->ratings, study.dimensions(),
                                    study.weighting_mode);
    write_response(session_id, *response);
    session.state = SessionState::scored;
    write_session(session);
    return *response->score;
  }

  /// record_ratings followed by score_and_persist.
  WorkloadScore submit_ratings(std::string_view session_id, const RatingVector& ratings) {
    record_ratings(session_id, ratings);
    return score_and_persist(session_id);
  }

  WorkloadScore get_score(std::string_view session_id) const {
    const auto session = get_session(session_id);
    const auto response = read_response(session_id);
    if (session.state != SessionState::scored || !response || !response->score) {
      throw Error(ErrorKind::state, "session '" + session.session_id + "' is in state " +
                                        std::string(to_string(session.state)) +
                                        " and has no score yet");
    }
    return *response->score;
  }

  // -- events ---------------------------------------------------------------

  /// Appends a batch all-or-nothing. Events whose canonical line is already
  /// in the log (or earlier in the batch) are dropped and counted.
  AppendResult append_events(std::string_view session_id, const EventBatch& batch) {
    auto lock = lock_session(session_id);
    const auto session = get_session(session_id);
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < batch.events.size(); ++i) {
      if (batch.events[i].session_id != session.session_id) {
        problems.push_back("event " + std::to_string(i + 1) + ": session_id '" +
                           batch.events[i].session_id + "' does not match '" +
                           session.session_id + "'");
      }
    }
    if (!problems.empty()) {
      auto msg = "event batch rejected: " + problems.front();
      throw Error(ErrorKind::validation, std::move(msg), std::move(problems));
    }

    const auto dir = session_dir(session_id);
    const auto committed = committed_length(dir);
    std::set<std::string, std::less<>> existing;
    {
      const auto text = read_committed(dir, committed);
      std::string_view rest = text;
      while (!rest.empty()) {
        const auto nl = rest.find('\n');
        existing.emplace(rest.substr(0, nl));
        rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
      }
    }

    AppendResult result;
    std::string payload;
    for (const auto& e : batch.events) {
      auto line = serialize_event(e);
      if (!existing.insert(line).second) {
        ++result.deduplicated;
        continue;
      }
      payload += line;
      payload += '\n';
      ++result.appended;
    }
    if (payload.empty()) return result;

    const auto log = dir / "events.ndjson";
    {
      detail::Fd fd(log, O_WRONLY | O_CREAT);
      // Drop the torn tail of a batch that never committed.
      if (::ftruncate(fd.get(), static_cast<off_t>(committed)) != 0) {
        detail::io_failure(log, "truncate failed");
      }
      if (::lseek(fd.get(), static_cast<off_t>(committed), SEEK_SET) < 0) {
        detail::io_failure(log, "seek failed");
      }
      detail::write_all(fd.get(), payload, log);
      if (::fsync(fd.get()) != 0) detail::io_failure(log, "fsync failed");
    }
    Json commit;
    commit["length"] = committed + payload.size();
    detail::atomic_write(dir / "events.commit", commit.dump() + "\n");
    return result;
  }

  /// Parses newline-delimited records and appends them as one batch.
  AppendResult append_event_text(std::string_view session_id, std::string_view text,
                                 EventSource source = EventSource::network) {
    get_session(session_id);
    return append_events(session_id, parse_event_log(text, source));
  }

  /// Committed events in log order.
  std::vector<InteractionEvent> read_events(std::string_view session_id) const {
    get_session(session_id);
    const auto dir = session_dir(session_id);
    return parse_event_log(read_committed(dir, committed_length(dir))).events;
  }

  /// Metrics rows for every session with at least one event.
  std::vector<ReportRow> report_rows(std::optional<std::string_view> study_id = std::nullopt) const {
    std::vector<ReportRow> rows;
    for (const auto& s : list_sessions(study_id)) {
      const auto events = read_events(s.session_id);
      if (events.empty()) continue;
      rows.push_back({s.session_id, s.user_id, s.profile, compute_session_metrics(events)});
    }
    return rows;
  }

 private:
  static bool valid_id(std::string_view id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) {
             return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
           });
  }

  std::filesystem::path study_path(std::string_view id) const {
    return root_ / "studies" / std::string(id) / "study.json";
  }

  std::filesystem::path session_dir(std::string_view id) const {
    return root_ / "sessions" / std::string(id);
  }

  /// Fresh 8-character base-32 token, reserved by creating its directory.
  std::string claim_directory(const std::filesystem::path& parent) {
    static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz234567";
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::string id;
      {
        std::lock_guard guard(rng_mutex_);
        for (int i = 0; i < 8; ++i) id += kAlphabet[uniform_below(rng_, kAlphabet.size())];
      }
      const auto dir = parent / id;
      if (::mkdir(dir.c_str(), 0755) == 0) {
        detail::fsync_dir(parent);
        return id;
      }
      if (errno != EEXIST) detail::io_failure(dir, "cannot create directory");
    }
    throw Error(ErrorKind::internal, "could not allocate a unique identifier");
  }

  static std::vector<std::string> list_ids(const std::filesystem::path& parent,
                                           std::string_view document) {
    std::vector<std::string> ids;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(parent, ec)) {
      if (entry.is_directory() && std::filesystem::exists(entry.path() / document)) {
        ids.push_back(entry.path().filename().string());
      }
    }
    if (ec) detail::io_failure(parent, "cannot list", ec.value());
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  std::unique_lock<std::mutex> lock_session(std::string_view id) {
    std::shared_ptr<std::mutex> m;
    {
      std::lock_guard guard(locks_mutex_);
      auto& slot = session_locks_[std::string(id)];
      if (!slot) slot = std::make_shared<std::mutex>();
      m = slot;
    }
    // The map never erases entries, so the mutex outlives this lock.
    return std::unique_lock<std::mutex>(*m);
  }

  void write_session(const Session& s) {
    detail::atomic_write(session_dir(s.session_id) / "session.json", dump_json(to_json(s), 2) + "\n");
  }

  std::optional<Response> read_response(std::string_view session_id) const {
    const auto path = session_dir(session_id) / "response.json";
    if (!std::filesystem::exists(path)) return std::nullopt;
    const auto j = detail::read_json_file(path);
    Response r;
    r.choices = choices_from_json(detail::member(j, "choices"));
    if (const auto& rt = detail::member(j, "ratings"); !rt.is_null()) r.ratings = ratings_from_json(rt);
    if (const auto& sc = detail::member(j, "score_exact"); !sc.is_null()) {
      r.score = detail::score_from_record(sc);
    }
    return r;
  }

  void write_response(std::string_view session_id, const Response& r) {
    Json j;
    j["choices"] = to_json(r.choices);
    if (r.ratings) {
      Json rj = Json::object();
      for (const auto& [id, v] : *r.ratings) rj[id] = v;
      j["ratings"] = std::move(rj);
    } else {
      j["ratings"] = nullptr;
    }
    j["score"] = r.score ? to_json(*r.score) : Json(nullptr);
    j["score_exact"] = r.score ? detail::score_record(*r.score) : Json(nullptr);
    detail::atomic_write(session_dir(session_id) / "response.json", dump_json(j, 2) + "\n");
  }

  static std::size_t committed_length(const std::filesystem::path& dir) {
    const auto path = dir / "events.commit";
    if (!std::filesystem::exists(path)) return 0;
    const auto j = detail::read_json_file(path);
    return detail::member(j, "length").get<std::size_t>();
  }

  static std::string read_committed(const std::filesystem::path& dir, std::size_t length) {
    if (length == 0) return {};
    const auto path = dir / "events.ndjson";
    std::ifstream in(path, std::ios::binary);
    if (!in) detail::io_failure(path, "cannot read", errno == 0 ? ENOENT : errno);
    std::string buf(length, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(length));
    if (static_cast<std::size_t>(in.gcount()) != length) {
      throw Error(ErrorKind::internal, "event log '" + path.string() + "' is shorter than its commit record");
    }
    return buf;
  }

  std::filesystem::path root_;
  mutable std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>, std::less<>> session_locks_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace tlx
