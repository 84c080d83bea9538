#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpsgd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or mismatched shapes. The CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared in a parameter or gradient.
class NumericFault : public Error {
 public:
  NumericFault(const std::string& what, std::size_t dimension)
      : Error(what + " (dimension " + std::to_string(dimension) + ")"), dimension_(dimension) {}

  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t dimension_;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " at line " + std::to_string(line) : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Connection, framing or peer failure in a transport.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpsgd
