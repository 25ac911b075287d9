// tlx: operator command line for the workload toolkit.
//
//   tlx serve    --store DIR --bind HOST:PORT
//   tlx score    RESPONSE.json
//   tlx metrics  LOG.events.ndjson [--format table|json] [--threshold-ms N]
//   tlx simulate --out DIR [--spec SPEC.json] [--seed N] [--users N] [--store DIR]
//   tlx report   --store DIR [--study ID] [--group-by KEY] [--format csv|json]
//
// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>

#include "tlx/tlx.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitIo = 2;

int report_failure(const tlx::Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
  return (e.kind() == tlx::ErrorKind::io || e.kind() == tlx::ErrorKind::internal) ? kExitIo
                                                                                  : kExitUser;
}

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tlx::Error(tlx::ErrorKind::io, "cannot read '" + path + "'", {path});
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    throw tlx::Error(tlx::ErrorKind::io, "cannot write '" + path.string() + "'", {path.string()});
  }
}

std::string default_store() {
  if (const char* env = std::getenv("TLX_STORE"); env && *env) return env;
  return "tlx-store";
}

// -- serve --------------------------------------------------------------------

int cmd_serve(const std::string& store_path, const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    throw tlx::Error(tlx::ErrorKind::validation, "--bind must be HOST:PORT");
  }
  const auto host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw tlx::Error(tlx::ErrorKind::validation, "invalid port in --bind '" + bind + "'");
  }

  // Termination signals are taken synchronously by a watcher thread, which
  // asks the server to drain and stop.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  tlx::StudyStore store(store_path);
  tlx::Service service(store);
  const int bound = service.bind(host, port);
  std::cerr << "tlx " << tlx::kVersion << " listening on " << host << ":" << bound
            << " (store " << store.root().string() << ")\n";

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "received signal " << sig << ", shutting down\n";
    service.stop();
  });
  service.run();
  // If run() returned on its own, wake the watcher.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kExitOk;
}

// -- score --------------------------------------------------------------------

int cmd_score(const std::string& path) {
  const auto response = tlx::response_from_json(tlx::parse_json_document(read_input(path)));
  const tlx::DimensionSet dims(response.variant);
  tlx::require_compatible(response.variant, response.mode);
  const auto score = tlx::score_session(response.choices, response.ratings, dims, response.mode);
  std::cout << tlx::dump_json(tlx::to_json(score), 2) << "\n";
  return kExitOk;
}

// -- metrics ------------------------------------------------------------------

int cmd_metrics(const std::string& path, const std::string& format, long threshold_ms) {
  const auto batch = tlx::parse_event_log(read_input(path));
  if (threshold_ms <= 0) throw tlx::Error(tlx::ErrorKind::validation, "--threshold-ms must be positive");
  const tlx::Millis threshold{threshold_ms};
  const auto metrics = tlx::compute_session_metrics(batch.events, threshold);
  const auto objects = tlx::compute_focused_objects(batch.events, threshold);

  if (format == "json") {
    tlx::Json j;
    j["metrics"] = tlx::to_json(metrics);
    tlx::Json list = tlx::Json::array();
    for (const auto& o : objects) list.push_back(tlx::to_json(o));
    j["objects"] = std::move(list);
    std::cout << tlx::dump_json(j, 2) << "\n";
  } else if (format == "table") {
    std::printf("session_id          %s\n", metrics.session_id.c_str());
    std::printf("total_interactions  %lld\n", static_cast<long long>(metrics.total_interactions));
    std::printf("  clicks            %lld\n", static_cast<long long>(metrics.clicks));
    std::printf("  gazes             %lld\n", static_cast<long long>(metrics.gazes));
    std::printf("usage_time_ms       %lld\n", static_cast<long long>(metrics.usage_time.count()));
    std::printf("clicks_per_minute   %s\n", tlx::format_fixed2(metrics.clicks_rate()).c_str());
    std::printf("gazes_per_minute    %s\n", tlx::format_fixed2(metrics.gazes_rate()).c_str());
    std::printf("focused_objects     %lld\n", static_cast<long long>(metrics.focused_objects));
    std::printf("\n%-24s %6s %12s %12s %8s\n", "object_id", "gazes", "total_ms", "longest_ms",
                "focused");
    for (const auto& o : objects) {
      std::printf("%-24s %6lld %12lld %12lld %8s\n", o.object_id.c_str(),
                  static_cast<long long>(o.gaze_count), static_cast<long long>(o.total_dwell.count()),
                  static_cast<long long>(o.longest_dwell.count()), o.focused ? "yes" : "no");
    }
  } else {
    throw tlx::Error(tlx::ErrorKind::validation, "unknown format '" + format + "'");
  }
  return kExitOk;
}

// -- simulate -----------------------------------------------------------------

int cmd_simulate(const std::string& out_dir, const std::string& spec_path,
                 std::optional<std::uint64_t> seed, std::optional<int> users,
                 const std::string& store_path) {
  auto spec = spec_path.empty()
                  ? tlx::SimulationSpec{}
                  : tlx::simulation_spec_from_json(tlx::parse_json_document(read_input(spec_path)));
  if (seed) spec.seed = *seed;
  if (users) spec.users = *users;
  const auto sessions = tlx::simulate_sessions(spec);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw tlx::Error(tlx::ErrorKind::io, "cannot create '" + out_dir + "': " + ec.message());

  std::string participants(tlx::kParticipantsCsvHeader);
  participants += '\n';
  for (const auto& s : sessions) {
    std::string log;
    for (const auto& e : s.events) log += tlx::serialize_event(e) + "\n";
    write_output(std::filesystem::path(out_dir) / (s.session_id + std::string(tlx::kEventLogExtension)), log);
    participants += tlx::csv_field(s.session_id) + "," + tlx::csv_field(s.user_id) + "," +
                    std::string(tlx::to_string(s.profile.app_knowledge)) + "," +
                    std::string(tlx::to_string(s.profile.device_experience)) + "\n";
  }
  write_output(std::filesystem::path(out_dir) / "participants.csv", participants);

  if (!store_path.empty()) {
    tlx::StudyStore store(store_path);
    const auto study = store.create_study("simulated seed " + std::to_string(spec.seed),
                                          tlx::Variant::classic6, tlx::WeightingMode::classic);
    for (const auto& s : sessions) {
      const auto session = store.create_session(study.study_id, s.user_id, s.profile);
      tlx::EventBatch batch{s.events, tlx::EventSource::file};
      for (auto& e : batch.events) e.session_id = session.session_id;
      store.append_events(session.session_id, batch);
    }
    std::cerr << "imported " << sessions.size() << " sessions into study " << study.study_id << "\n";
    std::cout << study.study_id << "\n";
  }
  std::cerr << "wrote " << sessions.size() << " event logs to " << out_dir << "\n";
  return kExitOk;
}

// -- report -------------------------------------------------------------------

int cmd_report(const std::string& store_path, const std::string& study,
               const std::string& group_by, const std::string& format) {
  const auto by = tlx::parse_group_by(group_by);
  const auto fmt = tlx::parse_report_format(format);
  if (!std::filesystem::is_directory(store_path)) {
    throw tlx::Error(tlx::ErrorKind::io, "store '" + store_path + "' does not exist", {store_path});
  }
  tlx::StudyStore store(store_path);
  auto rows = study.empty() ? store.report_rows() : store.report_rows(study);
  if (rows.empty()) {
    throw tlx::Error(tlx::ErrorKind::validation, "no sessions with events in store '" + store_path + "'");
  }
  std::cout << tlx::render_report(std::move(rows), by, fmt);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workload questionnaire scoring and interaction telemetry toolkit", "tlx"};
  app.set_version_flag("--version", std::string(tlx::kVersion));
  app.require_subcommand(1);

  std::string store_path = default_store();
  std::string bind = "127.0.0.1:8080";
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--store", store_path, "Store directory (default: $TLX_STORE or ./tlx-store)");
  serve->add_option("--bind", bind, "Listen address HOST:PORT");

  std::string response_path;
  auto* score = app.add_subcommand("score", "Score a questionnaire response file");
  score->add_option("response", response_path, "Response JSON file")->required();

  std::string events_path;
  std::string metrics_format = "table";
  long threshold_ms = 1000;
  auto* metrics = app.add_subcommand("metrics", "Session metrics for an event log");
  metrics->add_option("events", events_path, "Event log (.events.ndjson)")->required();
  metrics->add_option("--format", metrics_format, "table or json");
  metrics->add_option("--threshold-ms", threshold_ms, "Focus threshold in milliseconds");

  std::string out_dir;
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> users;
  std::string sim_store;
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic sessions");
  simulate->add_option("--out", out_dir, "Output directory")->required();
  simulate->add_option("--spec", spec_path, "Simulation spec JSON");
  simulate->add_option("--seed", seed, "Random seed (overrides the spec)");
  simulate->add_option("--users", users, "Number of users (overrides the spec)");
  simulate->add_option("--store", sim_store, "Also import the sessions into this store");

  std::string study;
  std::string group_by;
  std::string report_format = "csv";
  auto* report = app.add_subcommand("report", "Cohort metrics table");
  report->add_option("--store", store_path, "Store directory (default: $TLX_STORE or ./tlx-store)");
  report->add_option("--study", study, "Restrict to one study");
  report->add_option("--group-by", group_by, "app_knowledge or device_experience");
  report->add_option("--format", report_format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*serve) return cmd_serve(store_path, bind);
    if (*score) return cmd_score(response_path);
    if (*metrics) return cmd_metrics(events_path, metrics_format, threshold_ms);
    if (*simulate) return cmd_simulate(out_dir, spec_path, seed, users, sim_store);
    if (*report) return cmd_report(store_path, study, group_by, report_format);
  } catch (const tlx::Error& e) {
    return report_failure(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUser;
}
