#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sot {

enum class ErrorCode {
  invalid_argument,
  degenerate_distribution,
  numeric_failure,
  too_large,
  atom_unused,
  parse_error,
  unsupported_version,
  io_error,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised while decoding a model file; carries the byte offset at which
/// decoding stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] void throw_invalid(const std::string& message);

}  // namespace sot
