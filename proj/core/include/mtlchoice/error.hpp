#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtlchoice {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch. `layer` is the offending layer index when known, -1 otherwise.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what, long layer = -1)
      : Error(what), layer_(layer) {}
  long layer() const noexcept { return layer_; }

 private:
  long layer_;
};

/// Argument outside the mathematical domain of an operation (e.g. T <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed in-memory input (non-finite values, non one-hot labels, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// CSV ingestion failure; `row` is the 1-based data row number (header excluded).
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::size_t row)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Invalid configuration (hyperparameters, ties, experiment files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long iteration, std::string component)
      : Error(what), iteration_(iteration), component_(std::move(component)) {}
  long iteration() const noexcept { return iteration_; }
  const std::string& component() const noexcept { return component_; }

 private:
  long iteration_;
  std::string component_;
};

}  // namespace mtlchoice
