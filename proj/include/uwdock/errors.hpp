#pragma once

#include <stdexcept>
#include <string>

namespace uwdock {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Euler-angle kinematics undefined near pitch +/- 90 deg.
struct GimbalLockError : Error {
  using Error::Error;
};

/// A state entry became non-finite during integration.
struct NumericalDivergenceError : Error {
  using Error::Error;
};

/// Undefined (stage, event) pair fed to the docking state machine.
struct InvalidTransitionError : Error {
  using Error::Error;
};

/// Image dimensions do not match the network input spec.
struct ShapeMismatchError : Error {
  using Error::Error;
};

/// Training loss became non-finite.
struct NonFiniteLossError : Error {
  using Error::Error;
};

/// Split ratios are negative or do not sum to one.
struct BadRatiosError : Error {
  using Error::Error;
};

/// Malformed or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Iterative calibration failed to converge.
struct NoConvergenceError : Error {
  using Error::Error;
};

}  // namespace uwdock
