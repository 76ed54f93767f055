#pragma once

#include <stdexcept>
#include <string>

#include "shadow/types.hpp"

namespace shadow {

/// Base class of every numerical failure raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A state, tangent or cotangent vector with non-finite entries or wrong size.
class InvalidStateError : public Error {
public:
  using Error::Error;
};

/// Caller passed inconsistent data, e.g. u != step(u_prev, s).
class ConsistencyError : public Error {
public:
  using Error::Error;
};

/// Carries the orbit step at which a numerical problem was detected.
class StepError : public Error {
public:
  StepError(const std::string &what, Index step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  Index step() const { return step_; }

private:
  Index step_;
};

/// Orbit escaped to non-finite values.
class DivergenceError : public StepError {
public:
  using StepError::StepError;
};

/// Tangent or adjoint basis lost rank during propagation.
class DegenerateBasisError : public StepError {
public:
  using StepError::StepError;
};

/// Raw inhomogeneous tangent solution overflowed; use shorter segments.
class SegmentTooLongError : public StepError {
public:
  using StepError::StepError;
};

/// Tangent and adjoint unstable subspaces are (nearly) tangent.
class SplittingDegenerateError : public StepError {
public:
  SplittingDegenerateError(const std::string &what, Index step,
                           double condition)
      : StepError(what + ", condition " + std::to_string(condition), step),
        condition_(condition) {}
  double condition() const { return condition_; }

private:
  double condition_;
};

/// Not enough samples or renormalization records for an estimator.
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

/// Requested window extends past the stored orbit buffer.
class NeedsLongerOrbitError : public Error {
public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace shadow
