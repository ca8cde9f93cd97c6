#pragma once

#include <stdexcept>
#include <string>

namespace blupcal {

// Invalid parameters, configuration files, or command-line arguments.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Input data that cannot be fitted: malformed CSV, misaligned panels,
// degenerate replicate structure.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Variance components or exposure not identifiable from the supplied data.
class IdentifiabilityError : public DataError {
public:
  using DataError::DataError;
};

// Design matrix without full column rank. `column` is the zero-based index
// of the first column that is linearly dependent on the ones before it.
class SingularDesignError : public DataError {
public:
  SingularDesignError(const std::string& what, int column)
      : DataError(what), column_(column) {}
  int column() const noexcept { return column_; }

private:
  int column_;
};

}  // namespace blupcal
