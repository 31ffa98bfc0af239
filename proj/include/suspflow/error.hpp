#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace suspflow {

enum class ErrorCode {
  InvalidArgument,
  DomainViolation,
  ResourceLimit,
  NumericalFailure,
  PreconditionViolation,
  ParseError,
  ValidationError,
};

const char* to_string(ErrorCode code) noexcept;

/// Library-wide exception. `detail` carries structured context that reports
/// surface verbatim (e.g. the largest admissible time for a branch cap).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, nlohmann::ordered_json detail = {})
      : std::runtime_error(what), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::ordered_json& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  nlohmann::ordered_json detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what,
                              nlohmann::ordered_json detail = {}) {
  throw Error(code, what, std::move(detail));
}

}  // namespace suspflow
