#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bistochastic {

/// Broad failure categories; the CLI maps each one to an exit code.
enum class ErrorKind {
  Ingestion,   // malformed input files
  Io,          // missing files, unwritable outputs
  Argument,    // bad parameters, dimension mismatches, refused requests
  Degenerate,  // data that cannot support the requested quantity
  Validation,  // positivity/finiteness conditions on the affinity failed
  Numerical,   // non-finite or inconsistent intermediate results
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Pipeline stage that raised the error ("" outside of fit()).
  const std::string& stage() const noexcept { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  ErrorKind kind_;
  std::string stage_;
};

class IngestionError : public Error {
 public:
  IngestionError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Ingestion,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what)
      : Error(ErrorKind::Argument, what) {}
};

class DegenerateDataError : public Error {
 public:
  explicit DegenerateDataError(const std::string& what)
      : Error(ErrorKind::Degenerate, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

/// A density fell outside (tol, inf). `index` is the offending row (data
/// density) or column (reference density).
class AssumptionViolation : public Error {
 public:
  enum class Density { Data, Reference };

  AssumptionViolation(Density which, std::size_t index, const std::string& what)
      : Error(ErrorKind::Validation, what), which_(which), index_(index) {}

  Density which() const noexcept { return which_; }
  std::size_t index() const noexcept { return index_; }

 private:
  Density which_;
  std::size_t index_;
};

}  // namespace bistochastic
