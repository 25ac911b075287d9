#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <httplib.h>

#include "tlx/error.hpp"
#include "tlx/json_io.hpp"
#include "tlx/metrics.hpp"
#include "tlx/report.hpp"
#include "tlx/scoring.hpp"
#include "tlx/study_store.hpp"

namespace tlx {

inline constexpr std::string_view kVersion = "0.1.0";

inline Json error_body(ApiCode code, std::string_view message,
                       const std::vector<std::string>& details = {}) {
  Json j;
  j["code"] = to_string(code);
  j["message"] = message;
  if (!details.empty()) j["details"] = details;
  return j;
}

/// HTTP front end over a StudyStore. Every endpoint maps onto one store or
/// engine call; failures always come back as {code, message, details?}.
class Service {
 public:
  explicit Service(StudyStore& store) : store_(store) {
    // httplib defaults to SO_REUSEPORT, which lets a second server share a
    // busy port silently.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    install_routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds without serving yet. Port 0 picks a free port; returns the bound port.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) {
      throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return bound;
  }

  /// Serves until stop(); in-flight requests finish before this returns.
  void run() { server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  bool is_running() const { return server_.is_running(); }

 private:
  using Req = httplib::Request;
  using Res = httplib::Response;

  static void send_json(Res& res, const Json& body, int status = 200) {
    res.status = status;
    res.set_content(dump_json(body), "application/json");
  }

  static void send_error(Res& res, const Error& e) {
    res.status = http_status(e.code());
    res.set_content(dump_json(error_body(e.code(), e.what(), e.details())), "application/json");
  }

  template <typename Fn>
  static httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const Req& req, Res& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_error(res, Error(ErrorKind::internal, e.what()));
      }
    };
  }

  static Json body_json(const Req& req) {
    if (req.body.empty()) throw Error(ErrorKind::validation, "request body is empty");
    return parse_json_document(req.body);
  }

  static std::optional<std::uint64_t> seed_param(const Req& req) {
    if (!req.has_param("seed")) return std::nullopt;
    const auto text = req.get_param_value("seed");
    std::uint64_t v = 0;
    if (text.empty() || text.size() > 20 ||
        text.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorKind::validation, "seed must be a non-negative integer", {"seed"});
    }
    try {
      v = std::stoull(text);
    } catch (const std::exception&) {
      throw Error(ErrorKind::validation, "seed out of range", {"seed"});
    }
    return v;
  }

  Json study_document(const Study& s) const {
    auto j = to_json(s);
    j["dimensions"] = to_json(s.dimensions());
    return j;
  }

  void install_routes() {
    server_.set_error_handler([](const Req&, Res& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      const auto code = res.status == 404 ? ApiCode::not_found
                        : res.status >= 500 ? ApiCode::internal
                                            : ApiCode::validation;
      res.set_content(dump_json(error_body(code, res.status == 404 ? "no such endpoint"
                                                                   : "request rejected")),
                      "application/json");
      return httplib::Server::HandlerResponse::Handled;
    });
    server_.set_exception_handler([](const Req&, Res& res, std::exception_ptr) {
      res.status = 500;
      res.set_content(dump_json(error_body(ApiCode::internal, "unhandled failure")),
                      "application/json");
    });

    server_.Get("/healthz", guarded([](const Req&, Res& res) {
      Json j;
      j["status"] = "ok";
      j["version"] = kVersion;
      send_json(res, j);
    }));

    // -- questionnaire ------------------------------------------------------

    server_.Get("/v1/studies", guarded([this](const Req&, Res& res) {
      Json j = Json::array();
      for (const auto& s : store_.list_studies()) j.push_back(to_json(s));
      send_json(res, j);
    }));

    server_.Post("/v1/studies", guarded([this](const Req& req, Res& res) {
      const auto body = body_json(req);
      const auto variant = parse_variant(detail::string_member(body, "dimension_set"));
      const auto mode = body.contains("weighting_mode")
                            ? parse_weighting_mode(detail::string_member(body, "weighting_mode"))
                            : default_mode(variant);
      const auto name = body.contains("name") ? detail::string_member(body, "name") : std::string();
      send_json(res, study_document(store_.create_study(name, variant, mode)), 201);
    }));

    server_.Get(R"(/v1/studies/([^/]+))", guarded([this](const Req& req, Res& res) {
      send_json(res, study_document(store_.get_study(req.matches[1].str())));
    }));

    server_.Post(R"(/v1/studies/([^/]+)/sessions)", guarded([this](const Req& req, Res& res) {
      const auto body = body_json(req);
      const auto user = detail::string_member(body, "user_id");
      const auto profile = profile_from_json(detail::member(body, "profile"));
      std::optional<std::string> id;
      if (body.contains("session_id")) id = detail::string_member(body, "session_id");
      send_json(res, to_json(store_.create_session(req.matches[1].str(), user, profile, id)), 201);
    }));

    server_.Get(R"(/v1/sessions/([^/]+))", guarded([this](const Req& req, Res& res) {
      const auto session = store_.get_session(req.matches[1].str());
      auto j = to_json(session);
      j["study"] = study_document(store_.get_study(session.study_id));
      send_json(res, j);
    }));

    server_.Get(R"(/v1/sessions/([^/]+)/pairs)", guarded([this](const Req& req, Res& res) {
      const auto session = store_.get_session(req.matches[1].str());
      const auto study = store_.get_study(session.study_id);
      Json j;
      j["session_id"] = session.session_id;
      j["weighting_mode"] = to_string(study.weighting_mode);
      j["pairs"] = to_json(generate_pairs(study.dimensions(), study.weighting_mode, seed_param(req)));
      send_json(res, j);
    }));

    server_.Post(R"(/v1/sessions/([^/]+)/choices)", guarded([this](const Req& req, Res& res) {
      const auto body = body_json(req);
      const auto& list = body.is_object() ? detail::member(body, "choices") : body;
      send_json(res, to_json(store_.record_choices(req.matches[1].str(), choices_from_json(list))));
    }));

    server_.Post(R"(/v1/sessions/([^/]+)/ratings)", guarded([this](const Req& req, Res& res) {
      const auto body = body_json(req);
      const auto& ratings = body.is_object() && body.contains("ratings") ? body["ratings"] : body;
      const auto id = req.matches[1].str();
      const auto score = store_.submit_ratings(id, ratings_from_json(ratings));
      Json j;
      j["session"] = to_json(store_.get_session(id));
      j["score"] = to_json(score);
      send_json(res, j);
    }));

    server_.Get(R"(/v1/sessions/([^/]+)/score)", guarded([this](const Req& req, Res& res) {
      send_json(res, to_json(store_.get_score(req.matches[1].str())));
    }));

    // -- telemetry ----------------------------------------------------------

    server_.Post(R"(/v1/sessions/([^/]+)/events)", guarded([this](const Req& req, Res& res) {
      const auto r = store_.append_event_text(req.matches[1].str(), req.body, EventSource::network);
      Json j;
      j["appended"] = r.appended;
      j["deduplicated"] = r.deduplicated;
      send_json(res, j);
    }));

    server_.Get(R"(/v1/sessions/([^/]+)/metrics)", guarded([this](const Req& req, Res& res) {
      const auto events = store_.read_events(req.matches[1].str());
      if (events.empty()) throw Error(ErrorKind::not_found, "no events");
      Json j;
      j["metrics"] = to_json(compute_session_metrics(events));
      Json objects = Json::array();
      for (const auto& s : compute_focused_objects(events)) objects.push_back(to_json(s));
      j["objects"] = std::move(objects);
      send_json(res, j);
    }));

    server_.Get(R"(/v1/studies/([^/]+)/report)", guarded([this](const Req& req, Res& res) {
      const auto by = parse_group_by(req.get_param_value("group_by"));
      const auto format = parse_report_format(req.get_param_value("format"));
      const auto text = render_report(store_.report_rows(req.matches[1].str()), by, format);
      res.set_content(text, format == ReportFormat::csv ? "text/csv" : "application/json");
    }));
  }

  StudyStore& store_;
  httplib::Server server_;
};

}  // namespace tlx
