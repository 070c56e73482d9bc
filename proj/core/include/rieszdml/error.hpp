#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rieszdml {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of vectors/matrices do not agree with the object they are used with.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented domain restriction (non-finite input,
/// negative regularization, empty index set, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Functional and dictionary (or data-generating process) cannot be combined.
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (CSV, matrix text, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// The regularized minimum distance program could not be solved to optimality.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t fold, bool infeasible)
      : Error(what), fold_(fold), infeasible_(infeasible) {}

  std::size_t fold() const noexcept { return fold_; }
  bool infeasible() const noexcept { return infeasible_; }

 private:
  std::size_t fold_;
  bool infeasible_;
};

}  // namespace rieszdml
