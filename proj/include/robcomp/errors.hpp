#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace robcomp {

// Invalid input to an estimator (empty sample, non-finite value, q outside (0,1)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input is well-formed but the estimator is undefined on it (e.g. Siegel with all x equal).
class DegenerateInputError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Bad configuration: chain mismatch, ladder too short, counts out of range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative solver ran out of iterations. Carries the best objective value reached.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_value)
      : std::runtime_error(what), best_value_(best_value) {}
  double best_value() const noexcept { return best_value_; }

 private:
  double best_value_;
};

// Malformed dataset text; line is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace robcomp
