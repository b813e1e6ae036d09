#pragma once

#include <stdexcept>
#include <string>

namespace relent {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Quadrature or iteration failed to reach the requested tolerance in budget.
struct NonConvergent : Error {
  using Error::Error;
};

/// A chain state violates its coordinate domain (e.g. negative extension on a half line).
struct DomainViolation : Error {
  using Error::Error;
};

/// A requested grid does not cover the support of a density within tail tolerance.
struct GridTooCoarse : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

/// Empirical-measure occupancies must be integer counts divided by N.
struct NonIntegerCounts : Error {
  using Error::Error;
};

/// Samples fell outside the binning grid; message lists the offenders.
struct OutOfRange : Error {
  using Error::Error;
};

/// Explicit time step exceeds the scheme's stability bound.
struct StabilityViolation : Error {
  using Error::Error;
};

/// Finite-volume step produced a density below -1e-14 (indicates a bug or instability).
struct NegativeDensity : Error {
  using Error::Error;
};

/// A gradient stencil hit a zero-density interior cell.
struct ZeroDensityInterior : Error {
  using Error::Error;
};

/// P places mass where the reference equilibrium density underflows.
struct AbsoluteContinuityViolation : Error {
  using Error::Error;
};

/// Configuration file / CLI validation failure; message names the field.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace relent
