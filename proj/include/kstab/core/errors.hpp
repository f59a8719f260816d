#pragma once

#include <stdexcept>
#include <string>

namespace kstab {

enum class ErrorCode {
  domain,
  parse,
  validation,
  clockwise,
  unsupported_degree,
  arity,
  precondition,
  resolution,
  non_convergence,
  sampling,
  tolerance,
  io,
  internal,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::clockwise: return "clockwise";
    case ErrorCode::unsupported_degree: return "unsupported-degree";
    case ErrorCode::arity: return "arity";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::sampling: return "sampling";
    case ErrorCode::tolerance: return "tolerance";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCode::domain, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorCode::parse, w) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error(ErrorCode::precondition, w) {}
};

}  // namespace kstab
