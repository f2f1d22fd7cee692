#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sarhcox {

enum class ErrorKind {
  shape,
  parse,
  validation,
  stationarity,
  io,
  config,
  degenerate,
  overflow,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::stationarity: return "stationarity";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::overflow: return "overflow";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so the CLI can emit a
// machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace sarhcox
