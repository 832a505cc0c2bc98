#include "sot/error.hpp"

namespace sot {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::degenerate_distribution: return "degenerate-distribution";
    case ErrorCode::numeric_failure: return "numeric-failure";
    case ErrorCode::too_large: return "too-large";
    case ErrorCode::atom_unused: return "atom-unused";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::unsupported_version: return "unsupported-version";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(const std::string& message, std::size_t offset)
    : Error(ErrorCode::parse_error, message + " (at byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

void throw_invalid(const std::string& message) {
  throw Error(ErrorCode::invalid_argument, message);
}

}  // namespace sot
