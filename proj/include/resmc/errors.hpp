#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace resmc {

// Syntax or semantic error in a model/property text, with 1-based position.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, int column)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                           ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Expression evaluation failure (division by zero, non-integral update, ...).
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rate evaluated to a negative or non-finite value, or an update left the
// declared variable bounds. Carries the offending command name.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No trace in a cross-entropy batch satisfied the property.
class NoHitsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The random-restart search for an initial tilting vector gave up.
class InitialSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reachable state space exceeded the configured cap.
class StateSpaceTooLargeError : public std::runtime_error {
 public:
  explicit StateSpaceTooLargeError(std::uint64_t cap)
      : std::runtime_error("reachable state space exceeds cap of " +
                           std::to_string(cap)),
        cap_(cap) {}

  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t cap_;
};

// Property shape outside the fragment a numerical routine supports.
class UnsupportedPropertyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-point or value iteration failed to reach its residual target.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violation of an internal invariant; indicates a bug, not bad input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace resmc
