#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace odnoise {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  empty_mask,
  clamp_diverged,
  extrapolation_refused,
  degenerate_design,
  parse_error,
  io_error,
  internal,
};

inline std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::empty_mask: return "empty_mask";
    case ErrorCode::clamp_diverged: return "clamp_diverged";
    case ErrorCode::extrapolation_refused: return "extrapolation_refused";
    case ErrorCode::degenerate_design: return "degenerate_design";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace odnoise
