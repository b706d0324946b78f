#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cvtt {

// Maps one-to-one onto CLI exit codes (usage=1, data=2, execution=3).
enum class ErrorKind { usage = 1, data = 2, execution = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid configuration, schema declaration or argument.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Input data cannot support the requested operation (missing file, empty
/// fold part, filter emptied the dataset, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ExecutionError : public Error {
 public:
  explicit ExecutionError(const std::string& what)
      : Error(ErrorKind::execution, what) {}
};

/// A fit produced a non-finite value. `step` is the sweep (iALS) or column
/// (SLIM) where it was detected.
class NumericError : public ExecutionError {
 public:
  NumericError(const std::string& what, std::size_t step)
      : ExecutionError(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace cvtt
