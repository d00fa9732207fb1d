#pragma once

#include <stdexcept>
#include <string>

namespace topess {

/// Base class for data-level failures (bad input files, mismatched taxa).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed Newick or tabular input.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are individually valid but inconsistent with each other.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A scalar series with zero variance where a variance ratio is required.
class DegenerateSeries : public Error {
 public:
  DegenerateSeries() : Error("degenerate (constant) series") {}
};

}  // namespace topess
