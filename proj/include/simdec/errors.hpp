#pragma once

#include <stdexcept>
#include <string>

namespace simdec {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad value in an input file. Row numbers are 1-based data rows (header excluded).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ", column '" + column + "': " + what),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// Raised when a training loop produces a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A CLI command was started before the command that produces its inputs.
class DependencyError : public std::runtime_error {
 public:
  DependencyError(std::string required_command, const std::string& what)
      : std::runtime_error(what), required_command_(std::move(required_command)) {}

  const std::string& required_command() const { return required_command_; }

 private:
  std::string required_command_;
};

}  // namespace simdec
