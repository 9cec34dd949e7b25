#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ngcn {

// Caller violated a documented precondition (shapes, ranges, options).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value or a factorization broke down.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what,
                        std::ptrdiff_t pivot = -1)
      : std::runtime_error(what), pivot_(pivot) {}

  // Offending pivot for factorization failures, -1 otherwise.
  std::ptrdiff_t pivot() const noexcept { return pivot_; }

 private:
  std::ptrdiff_t pivot_;
};

// A bundle file is missing or malformed. The message names file and line.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An object was used before it reached the required state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ngcn
