#pragma once

#include <stdexcept>
#include <string>

namespace abc {

// Bad input: malformed files, violated preconditions, unknown names.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration failed assumption checks (CLI exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterates became non-finite or exceeded the blow-up threshold (CLI exit code 3).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

}  // namespace abc
