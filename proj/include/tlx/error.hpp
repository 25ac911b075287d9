#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tlx {

enum class ErrorKind {
  parse,
  validation,
  invalid_mode,
  inconsistent_weights,
  empty_session,
  not_found,
  conflict,
  state,
  io,
  internal,
};

// Wire-level error codes; several library kinds collapse onto one code.
enum class ApiCode { validation, not_found, conflict, state, internal };

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::invalid_mode: return "invalid_mode";
    case ErrorKind::inconsistent_weights: return "inconsistent_weights";
    case ErrorKind::empty_session: return "empty_session";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::state: return "state";
    case ErrorKind::io: return "io";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

inline ApiCode api_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::invalid_mode:
    case ErrorKind::inconsistent_weights:
      return ApiCode::validation;
    case ErrorKind::empty_session:
    case ErrorKind::not_found:
      return ApiCode::not_found;
    case ErrorKind::conflict: return ApiCode::conflict;
    case ErrorKind::state: return ApiCode::state;
    case ErrorKind::io:
    case ErrorKind::internal:
      return ApiCode::internal;
  }
  return ApiCode::internal;
}

inline std::string_view to_string(ApiCode c) {
  switch (c) {
    case ApiCode::validation: return "validation";
    case ApiCode::not_found: return "not_found";
    case ApiCode::conflict: return "conflict";
    case ApiCode::state: return "state";
    case ApiCode::internal: return "internal";
  }
  return "internal";
}

inline int http_status(ApiCode c) {
  switch (c) {
    case ApiCode::validation: return 400;
    case ApiCode::not_found: return 404;
    case ApiCode::conflict: return 409;
    case ApiCode::state: return 409;
    case ApiCode::internal: return 500;
  }
  return 500;
}

/// Every failure raised by the library. `details` holds one entry per
/// offending item (pair, field, line) when a check reports several at once.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::vector<std::string> details = {})
      : std::runtime_error(std::move(message)), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  ApiCode code() const noexcept { return api_code(kind_); }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorKind kind_;
  std::vector<std::string> details_;
};

/// Parse failure with the byte offset into the offending line.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t offset)
      : Error(ErrorKind::parse, std::move(message)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace tlx
