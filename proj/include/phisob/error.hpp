// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace phisob {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where the quantity is defined
/// (u outside I, a non-simplex weight vector, decreasing times, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A numerical evaluation failed: non-finite integrand, root finder did not
/// converge, rejection sampler hit its cap.
class EvaluationError : public Error {
public:
  using Error::Error;
};

/// A verifier refused to run because the convexity hypothesis it relies on
/// does not hold on the tested grid.
class HypothesisError : public Error {
public:
  using Error::Error;
};

/// Malformed configuration text. Carries the 1-based line number (0 if the
/// problem is not tied to a line).
class ParseError : public Error {
public:
  ParseError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  [[nodiscard]] int line() const noexcept { return line_; }

private:
  int line_;
};

}  // namespace phisob
