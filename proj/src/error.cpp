#include "suspflow/error.hpp"

namespace suspflow {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DomainViolation: return "domain-violation";
    case ErrorCode::ResourceLimit: return "resource-limit";
    case ErrorCode::NumericalFailure: return "numerical-failure";
    case ErrorCode::PreconditionViolation: return "precondition-violation";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::ValidationError: return "validation-error";
  }
  return "unknown";
}

}  // namespace suspflow
