// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "service_support.hpp"
#include "test_support.hpp"
#include "tlx/tlx.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using testing_support::read_text;
using testing_support::TempDir;

/// Collects the first few failures of one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() == 5) failures.push_back("...");
  }
};

struct Criterion {
  const char* name;
  double limit_s;  // 0 = untimed
  std::function<void(Check&)> body;
};

std::string fixture(const std::string& rel) { return read_text(std::string(TLX_FIXTURE_DIR) + "/" + rel); }

// -- scoring ------------------------------------------------------------------

void pair_counts(Check& c) {
  const tlx::DimensionSet classic(tlx::Variant::classic6), xr(tlx::Variant::xr11);
  c.expect(tlx::generate_pairs(classic, tlx::WeightingMode::classic).size() == 15, "classic != 15");
  c.expect(tlx::generate_pairs(xr, tlx::WeightingMode::xr_grouped).size() == 25, "xr_grouped != 25");
  c.expect(tlx::generate_pairs(xr, tlx::WeightingMode::xr_full).size() == 55, "xr_full != 55");
  const auto ids = xr.ids();
  const std::vector<std::string> ten(ids.begin(), ids.begin() + 10);
  c.expect(tlx::all_pairs(ten).size() == 45, "10-dimension pairing != 45");
  c.expect(tlx::pair_count(10) == 45, "pair_count(10) != 45");
}

void fixed_point(Check& c) {
  std::mt19937_64 rng(1);
  const std::pair<tlx::Variant, tlx::WeightingMode> variants[] = {
      {tlx::Variant::classic6, tlx::WeightingMode::classic},
      {tlx::Variant::xr11, tlx::WeightingMode::xr_grouped},
      {tlx::Variant::xr11, tlx::WeightingMode::xr_full}};
  for (const auto& [variant, mode] : variants) {
    const tlx::DimensionSet dims(variant);
    const bool xr = variant == tlx::Variant::xr11;
    for (int i = 0; i < 1000; ++i) {
      const auto choices = oracle::random_choices(mode, rng);
      const int r = static_cast<int>(rng() % 21) * 5;
      const auto s = tlx::score_session(choices, oracle::uniform_ratings(xr, r), dims, mode);
      c.expect(s.weighted_task == tlx::Ratio{r, 1}, "weighted_task != " + std::to_string(r));
      c.expect(s.raw_task == tlx::Ratio{r, 1}, "raw_task != " + std::to_string(r));
      if (mode != tlx::WeightingMode::classic) {
        c.expect(s.weighted_technology && *s.weighted_technology == tlx::Ratio{r, 1},
                 "weighted_technology != " + std::to_string(r));
      }
    }
  }
}

void oracle_equivalence(Check& c) {
  std::mt19937_64 rng(2);
  const tlx::WeightingMode modes[] = {tlx::WeightingMode::classic, tlx::WeightingMode::xr_grouped,
                                      tlx::WeightingMode::xr_full};
  auto in_range = [](double v) { return v >= 0 && v <= 100; };
  for (int i = 0; i < 1000; ++i) {
    const auto mode = modes[i % 3];
    const bool xr = mode != tlx::WeightingMode::classic;
    const tlx::DimensionSet dims(xr ? tlx::Variant::xr11 : tlx::Variant::classic6);
    const auto choices = oracle::random_choices(mode, rng);
    const auto ratings = oracle::random_ratings(xr, rng);
    const auto got = tlx::score_session(choices, ratings, dims, mode);
    const auto want = oracle::naive_score(choices, ratings, mode);
    c.expect(std::abs(got.raw_task.value() - want.raw_task) <= 1e-9, "raw_task mismatch");
    c.expect(std::abs(got.weighted_task.value() - want.weighted_task) <= 1e-9, "weighted_task mismatch");
    c.expect(got.weighted_technology.has_value() == want.has_technology, "technology presence mismatch");
    if (got.weighted_technology) {
      c.expect(std::abs(got.weighted_technology->value() - want.weighted_technology) <= 1e-9,
               "weighted_technology mismatch");
      c.expect(in_range(got.weighted_technology->value()), "technology score out of range");
    }
    c.expect(in_range(got.raw_task.value()) && in_range(got.weighted_task.value()), "score out of range");
  }
}

// -- metrics ------------------------------------------------------------------

void focus_boundary(Check& c) {
  const tlx::Timestamp t0{tlx::Millis{1'709'280'000'000}};
  auto gaze = [&](const char* obj, std::int64_t ms) {
    return tlx::InteractionEvent{"b", tlx::EventKind::gaze, obj, t0, t0 + tlx::Millis{ms}};
  };
  const std::vector<tlx::InteractionEvent> both{gaze("exact", 1000), gaze("short", 999)};
  const auto objects = tlx::compute_focused_objects(both);
  c.expect(objects.size() == 2, "expected two objects");
  for (const auto& o : objects) {
    if (o.object_id == "exact") c.expect(o.focused, "1000 ms gaze not focused");
    if (o.object_id == "short") c.expect(!o.focused, "999 ms gaze focused");
  }
  const std::vector<tlx::InteractionEvent> exact{gaze("exact", 1000)}, short_gaze{gaze("short", 999)};
  c.expect(tlx::compute_session_metrics(exact).focused_objects == 1, "1000 ms metric");
  c.expect(tlx::compute_session_metrics(short_gaze).focused_objects == 0, "999 ms metric");
}

void metrics_oracle(Check& c) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto events = oracle::random_session(rng, 5000, 50);
    const auto m = tlx::compute_session_metrics(events);
    const auto b = oracle::brute_metrics(events, 1000);
    const auto n = static_cast<std::int64_t>(events.size());
    c.expect(m.total_interactions == n, "total_interactions");
    c.expect(m.clicks == b.clicks && m.gazes == b.gazes, "click/gaze counts");
    c.expect(m.usage_time.count() == b.usage_ms, "usage_time");
    c.expect(m.focused_objects == b.focused, "focused_objects");
    if (b.usage_ms > 0) {
      c.expect(m.clicks_rate() == tlx::Ratio{b.clicks * 60'000, b.usage_ms}, "clicks_per_minute");
      c.expect(m.gazes_rate() == tlx::Ratio{b.gazes * 60'000, b.usage_ms}, "gazes_per_minute");
    }
    std::shuffle(events.begin(), events.end(), rng);
    c.expect(tlx::compute_session_metrics(events) == m, "metrics changed under permutation");
  }
}

// -- wire format --------------------------------------------------------------

void wire_round_trip(Check& c) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10'000; ++i) {
    const auto e = oracle::random_event(rng, oracle::random_token(rng, 12, true), true);
    const auto line = tlx::serialize_event(e);
    try {
      c.expect(tlx::parse_event_line(line) == e, "round trip changed: " + line);
    } catch (const std::exception& ex) {
      c.expect(false, std::string("round trip threw: ") + ex.what());
    }
  }
  const std::string seed_line =
      R"({"session_id":"s1","kind":"gaze","object_id":"menu_root","start":"2024-03-01T10:15:01.000Z","end":"2024-03-01T10:15:02.500Z"})";
  for (int i = 0; i < 20'000; ++i) {
    std::string line = seed_line;
    for (int k = 0, edits = 1 + static_cast<int>(rng() % 4); k < edits; ++k) {
      const auto pos = rng() % (line.size() + 1);
      switch (rng() % 4) {
        case 0: if (pos < line.size()) line.erase(pos, 1); break;
        case 1: line.insert(pos, 1, static_cast<char>(rng() % 256)); break;
        case 2: if (pos < line.size()) line[pos] = static_cast<char>(rng() % 256); break;
        case 3: line.resize(pos); break;
      }
    }
    try {
      const auto e = tlx::parse_event_line(line);
      c.expect(e.kind == tlx::EventKind::gaze ? e.end && *e.end >= e.start : !e.end, "invalid event accepted");
    } catch (const tlx::Error& ex) {
      c.expect(ex.kind() == tlx::ErrorKind::parse || ex.kind() == tlx::ErrorKind::validation,
               "unexpected error kind");
    } catch (const std::exception& ex) {
      c.expect(false, std::string("unstructured error: ") + ex.what());
    }
  }
}

// -- HTTP ---------------------------------------------------------------------

void end_to_end(Check& c) {
  using nlohmann::json;
  TempDir dir;
  testing_support::RunningService svc(dir.path());
  auto http = svc.client();
  auto post = [&](const std::string& path, const std::string& body, int want) -> std::string {
    const auto r = http->Post(path, body, "application/json");
    if (!r) {
      c.expect(false, "no response from POST " + path);
      return "{}";
    }
    c.expect(r->status == want, "POST " + path + " -> " + std::to_string(r->status) + " " + r->body);
    return r->body;
  };
  auto get = [&](const std::string& path) -> std::string {
    const auto r = http->Get(path);
    if (!r) {
      c.expect(false, "no response from GET " + path);
      return "{}";
    }
    c.expect(r->status == 200, "GET " + path + " -> " + std::to_string(r->status) + " " + r->body);
    return r->body;
  };
  auto profile = [](const char* app, const char* device) {
    return json{{"app_knowledge", app}, {"device_experience", device}};
  };

  // Questionnaire: classic uniform 50 and the grouped worked example.
  const auto classic = json::parse(post("/v1/studies", R"({"dimension_set":"classic6"})", 201)).value("study_id", "");
  const auto s1 = json::parse(post("/v1/studies/" + classic + "/sessions",
                                   json{{"user_id", "a"}, {"profile", profile("low", "high")}}.dump(), 201))
                      .value("session_id", "");
  {
    json early;
    for (const auto& id : oracle::kTaskIds) early[id] = 50;
    const auto r = http->Post("/v1/sessions/" + s1 + "/ratings", early.dump(), "application/json");
    c.expect(r && r->status == 409 && json::parse(r->body).value("code", "") == "state",
             "ratings before choices not a state error");
  }
  const auto pairs = json::parse(get("/v1/sessions/" + s1 + "/pairs?seed=11")).value("pairs", json::array());
  c.expect(pairs.size() == 15, "classic pairs != 15");
  json choices = json::array();
  for (const auto& p : pairs) choices.push_back({{"pair", p}, {"chosen", p[1]}});
  post("/v1/sessions/" + s1 + "/choices", json{{"choices", choices}}.dump(), 200);
  json ratings;
  for (const auto& id : oracle::kTaskIds) ratings[id] = 50;
  const auto scored = post("/v1/sessions/" + s1 + "/ratings", ratings.dump(), 200);
  c.expect(scored.find("\"weighted_task\":50.00") != std::string::npos, "uniform 50 did not score 50.00");
  c.expect(get("/v1/sessions/" + s1 + "/score").find("\"weighted_task\":50.00") != std::string::npos,
           "stored score differs");

  const auto xr = json::parse(post("/v1/studies", R"({"dimension_set":"xr11","weighting_mode":"xr_grouped"})", 201))
                      .value("study_id", "");
  const auto s2 = json::parse(post("/v1/studies/" + xr + "/sessions",
                                   json{{"user_id", "b"}, {"profile", profile("high", "low_none")}}.dump(), 201))
                      .value("session_id", "");
  const auto worked = json::parse(fixture("response_xr_grouped_worked.json"));
  post("/v1/sessions/" + s2 + "/choices", worked.at("choices").dump(), 200);
  const auto lib_score = tlx::score_session(tlx::choices_from_json(worked.at("choices")),
                                            tlx::ratings_from_json(worked.at("ratings")),
                                            tlx::DimensionSet(tlx::Variant::xr11), tlx::WeightingMode::xr_grouped);
  const auto xr_body = post("/v1/sessions/" + s2 + "/ratings", worked.at("ratings").dump(), 200);
  c.expect(xr_body.find("\"score\":" + tlx::dump_json(tlx::to_json(lib_score))) != std::string::npos,
           "grouped score differs from library: " + xr_body);
  c.expect(xr_body.find("\"weighted_technology\":75.00") != std::string::npos, "grouped tech != 75.00");
  post("/v1/sessions/" + s2 + "/choices", worked.at("choices").dump(), 200);
  post("/v1/sessions/" + s2 + "/ratings", R"({"mental_demand":5})", 400);

  // Telemetry: ingest, metrics and cohort reports.
  const auto telemetry = json::parse(post("/v1/studies", R"({"dimension_set":"classic6"})", 201)).value("study_id", "");
  const std::pair<const char*, json> users[] = {{"u1", json{{"user_id", "operator-a"}, {"profile", profile("low", "low_none")}}},
                                                {"u2", json{{"user_id", "Operator, B"}, {"profile", profile("medium", "high")}}},
                                                {"u3", json{{"user_id", "tech \"C\""}, {"profile", profile("high", "high")}}}};
  for (const auto& [id, body] : users) {
    auto b = body;
    b["session_id"] = id;
    post("/v1/studies/" + telemetry + "/sessions", b.dump(), 201);
    const auto log = fixture(std::string("three_users/") + id + ".events.ndjson");
    post(std::string("/v1/sessions/") + id + "/events", log, 200);
    const auto again = json::parse(post(std::string("/v1/sessions/") + id + "/events", log, 200));
    c.expect(again.value("appended", -1) == 0, "resend appended events");

    const auto events = tlx::parse_event_log(log).events;
    tlx::Json lib;
    lib["metrics"] = tlx::to_json(tlx::compute_session_metrics(events));
    lib["objects"] = tlx::Json::array();
    for (const auto& o : tlx::compute_focused_objects(events)) lib["objects"].push_back(tlx::to_json(o));
    c.expect(get(std::string("/v1/sessions/") + id + "/metrics") == tlx::dump_json(lib),
             std::string("metrics for ") + id + " differ from library");
  }
  const std::pair<const char*, const char*> goldens[] = {
      {"", "three_users.csv"},
      {"app_knowledge", "three_users_by_app_knowledge.csv"},
      {"device_experience", "three_users_by_device_experience.csv"}};
  for (const auto& [by, file] : goldens) {
    const auto body = get("/v1/studies/" + telemetry + "/report?format=csv&group_by=" + by);
    c.expect(body == fixture(file), std::string("report differs from ") + file);
  }
}

// -- store --------------------------------------------------------------------

void store_durability(Check& c) {
  TempDir dir;
  const tlx::UserProfile profile{tlx::AppKnowledge::high, tlx::DeviceExperience::low_none,
                                 tlx::TaskExperience::high};
  std::vector<tlx::Study> studies;
  std::vector<tlx::Session> sessions;
  std::map<std::string, std::optional<tlx::Response>> responses;
  std::map<std::string, std::vector<tlx::InteractionEvent>> events;
  std::mt19937_64 rng(6);
  {
    tlx::StudyStore store(dir.path());
    studies.push_back(store.create_study("c", tlx::Variant::classic6, tlx::WeightingMode::classic));
    studies.push_back(store.create_study("g", tlx::Variant::xr11, tlx::WeightingMode::xr_grouped));
    studies.push_back(store.create_study("f", tlx::Variant::xr11, tlx::WeightingMode::xr_full));
    for (const auto& st : studies) {
      for (int stage = 0; stage < 3; ++stage) {
        auto s = store.create_session(st.study_id, "user", profile);
        if (stage >= 1) store.record_choices(s.session_id, oracle::random_choices(st.weighting_mode, rng));
        if (stage >= 2) store.submit_ratings(s.session_id, oracle::random_ratings(st.variant == tlx::Variant::xr11, rng));
        auto batch = oracle::random_session(rng, 50, 5);
        for (auto& e : batch) e.session_id = s.session_id;
        store.append_events(s.session_id, {batch, tlx::EventSource::network});
        sessions.push_back(store.get_session(s.session_id));
        responses[s.session_id] = store.get_response(s.session_id);
        events[s.session_id] = store.read_events(s.session_id);
      }
    }
  }
  {
    tlx::StudyStore reopened(dir.path());
    for (const auto& st : studies) c.expect(reopened.get_study(st.study_id) == st, "study changed on reopen");
    for (const auto& s : sessions) {
      c.expect(reopened.get_session(s.session_id) == s, "session changed on reopen");
      c.expect(reopened.get_response(s.session_id) == responses[s.session_id], "response changed on reopen");
      c.expect(reopened.read_events(s.session_id) == events[s.session_id], "events changed on reopen");
    }
  }

  // A writer killed at arbitrary points must leave only whole batches.
  const auto id = sessions.front().session_id;
  const std::size_t before = events[id].size();
  constexpr int kBatch = 100;
  for (int round = 0; round < 5; ++round) {
    const pid_t child = ::fork();
    if (child < 0) {
      c.expect(false, "fork failed");
      return;
    }
    if (child == 0) {
      tlx::StudyStore store(dir.path());
      const tlx::Timestamp t0{tlx::Millis{1'709'280'000'000}};
      for (int b = 0;; ++b) {
        tlx::EventBatch batch;
        for (int k = 0; k < kBatch; ++k) {
          batch.events.push_back({id, tlx::EventKind::click,
                                  "r" + std::to_string(round) + "b" + std::to_string(b) + "_" + std::to_string(k),
                                  t0 + tlx::Millis{k}, std::nullopt});
        }
        store.append_events(id, batch);
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30 + 17 * round));
    ::kill(child, SIGKILL);
    int status = 0;
    ::waitpid(child, &status, 0);
    const auto now = tlx::StudyStore(dir.path()).read_events(id);
    std::map<std::string, int> per_batch;
    for (std::size_t i = before; i < now.size(); ++i) {
      ++per_batch[now[i].object_id.substr(0, now[i].object_id.find('_'))];
    }
    for (const auto& [tag, n] : per_batch) c.expect(n == kBatch, "partial batch " + tag + " visible");
    c.expect(std::equal(events[id].begin(), events[id].end(), now.begin()), "committed prefix changed");
  }

  // A torn tail left on disk is neither read nor kept.
  const auto log = dir.path() / "sessions" / id / "events.ndjson";
  tlx::StudyStore store(dir.path());
  const auto committed = store.read_events(id).size();
  testing_support::write_text(log, read_text(log) + "{\"session_id\":\"" + id + "\",\"kind\":\"cli");
  c.expect(store.read_events(id).size() == committed, "torn tail visible");
  tlx::EventBatch one;
  one.events.push_back({id, tlx::EventKind::click, "after-tear", tlx::Timestamp{tlx::Millis{1}}, std::nullopt});
  store.append_events(id, one);
  c.expect(store.read_events(id).size() == committed + 1, "append after tear lost data");
}

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"pair-count constants", 0.001, pair_counts},
      {"scoring fixed point", 1.0, fixed_point},
      {"scoring oracle equivalence", 0, oracle_equivalence},
      {"focus threshold boundary", 0, focus_boundary},
      {"metrics oracle equivalence", 30.0, metrics_oracle},
      {"wire-format round-trip", 0, wire_round_trip},
      {"end-to-end over HTTP", 10.0, end_to_end},
      {"store durability", 0, store_durability},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = Clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (cr.limit_s > 0 && secs >= cr.limit_s) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "took %.3f s, limit %.3f s", secs, cr.limit_s);
      check.failures.push_back(buf);
    }
    const bool ok = check.failures.empty();
    failed += !ok;
    std::printf("%s  %-28s %9.3f s\n", ok ? "PASS" : "FAIL", cr.name, secs);
    for (const auto& f : check.failures) std::printf("      %s\n", f.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
