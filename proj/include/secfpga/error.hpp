#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace secfpga {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A value violates a documented precondition or invariant (W = 0, Fc out of range, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

// An enumerated option is unknown or a combination is unsupported.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

// An operation was invoked on inputs it does not support (e.g. dual routing on a
// non-homogeneous fabric).
class PreconditionError : public Error {
public:
  using Error::Error;
};

// A text input could not be parsed. Carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string file_;
  std::size_t line_;
};

// A dual-rail stimulus broke the 4-phase protocol.
class ProtocolError : public Error {
public:
  ProtocolError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

} // namespace secfpga
