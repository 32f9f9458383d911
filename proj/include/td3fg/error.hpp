#pragma once

#include <stdexcept>
#include <string>

namespace td3fg {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch between tensors, networks, or environment specs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad or incomplete configuration (unknown env, missing generator, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid runtime input such as a NaN action or an empty demo set.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File parsed but violates a semantic invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace td3fg
