#pragma once

#include <stdexcept>
#include <string>

namespace cohent {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Desk-scale dimension guard exceeded (see max_dimension()).
struct DimensionError : Error {
  using Error::Error;
};

// Factor shapes, index sets or matrix sizes that do not fit together.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed or physically invalid input: bad JSON, wrong norm/trace,
// non-Hermitian operators, out-of-range levels.
struct InputError : Error {
  using Error::Error;
};

// Linearly dependent vectors where an independent set is required.
struct RankDeficientError : Error {
  using Error::Error;
};

// The SDP solver failed to produce a certified optimum.
struct SolverError : Error {
  SolverError(const std::string& what, double gap) : Error(what), gap(gap) {}
  double gap;
};

}  // namespace cohent
