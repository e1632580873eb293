#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace holterisk {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input bytes/text. Carries the byte offset (binary/header input)
// or the 1-based row number (tabular input) where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Structurally valid input that violates a contract (schema mismatch,
// insufficient data, invariant violation).
class DataError : public Error {
 public:
  using Error::Error;
};

// Iterative fit failed to converge or the likelihood is degenerate.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace holterisk
