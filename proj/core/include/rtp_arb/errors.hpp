#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rtp_arb {

// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (e.g. charge > W).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid battery/hyperparameter configuration or incompatible inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation not allowed in the current lifecycle state (stepping a finished episode).
class StateError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Price CSV problems; carries the 1-based file line number of the offending row
// (0 when the problem is not tied to a row) and optionally the file name.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& detail, std::size_t row, const std::string& source = {})
      : Error((source.empty() ? "" : source + ": ") + (row == 0 ? "" : "row " + std::to_string(row) + ": ") +
              detail),
        detail_(detail),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t row_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rtp_arb
