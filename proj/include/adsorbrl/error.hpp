#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adsorbrl {

/// Precondition violated by the caller (unknown element, bad action id, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data could not be read or parsed. `line()` is 0 when not tied to a row.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Training produced non-finite values.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adsorbrl
