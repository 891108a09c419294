#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowgnn {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, manifest, schema or CLI usage. Maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input columns do not match the schema.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A data row could not be parsed.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// Tensor or checkpoint dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An allocation would exceed a configured size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowgnn
