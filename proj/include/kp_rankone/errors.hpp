#pragma once

#include <stdexcept>
#include <string>

namespace kp_rankone {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (non-square, mismatched rows, N <= n).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Rank-deficient or otherwise degenerate input (det(A C^T) ~ 0, det X ~ 0).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Input violates the rank-one hypothesis of the construction.
class InadmissibleError : public Error {
 public:
  using Error::Error;
};

/// A Miwa shift with negative multiplicity hit a singular (I - B/c).
class SingularShiftError : public Error {
 public:
  using Error::Error;
};

/// tau vanishes where a finite value was required.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// Value outside the representable range (overflow of exp(g(B))).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Random generation could not satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Interpolation circle could not be placed away from the spectrum.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// All terms of a bilinear residual underflowed, so no relative scale exists.
class IndeterminateScaleError : public Error {
 public:
  using Error::Error;
};

/// Bethe-equation denominators vanish for the chosen parameters.
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace kp_rankone
