#pragma once

#include <stdexcept>
#include <string>

namespace purcell {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// log() asked for a pose whose canonical angle is outside the diffeomorphic
// neighborhood |theta| < pi - eps.
struct InjectivityRadiusError : Error {
  using Error::Error;
};

// A linear map that theory guarantees invertible came out numerically
// singular; indicates corrupted inputs rather than a model regime.
struct SingularError : Error {
  using Error::Error;
};

// Shape angles left (-pi, pi)^2, where the drag model is invalid.
struct ShapeOutOfDomainError : Error {
  using Error::Error;
};

// A per-step costate fixed point failed to contract (step length too large
// for the data magnitude).
struct FixedPointDivergedError : Error {
  using Error::Error;
};

// Lost rank in the shooting Newton system.
struct SingularJacobianError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace purcell
