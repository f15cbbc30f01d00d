#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace spinrs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A zero-sum / det-1 / traceless invariant was violated by more than the
/// projection limit (1e-6).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Evaluation too close to a coth pole, i.e. alpha(q) in 2*pi*i*Z for a root
/// in the span of the chosen simple subset.
class SingularityError : public Error {
 public:
  SingularityError(int i, int j, double distance)
      : Error("coth pole at root (" + std::to_string(i) + "," +
              std::to_string(j) + "): wall distance " +
              std::to_string(distance)),
        root_i(i),
        root_j(j),
        wall_distance(distance) {}
  int root_i;
  int root_j;
  double wall_distance;
};

/// A branch or eigenvalue assignment could not be continued unambiguously
/// between two samples; the caller should refine the grid.
class ContinuityError : public Error {
 public:
  ContinuityError(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// Groupoid multiplication with beta(p1) != alpha(p2).
class ComposabilityError : public Error {
 public:
  using Error::Error;
};

/// Integrator gave up (step budget or step-size underflow).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// The adaptive step shrank to roundoff level, typically on approach to a wall.
class StepSizeUnderflow : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

/// Quadrature could not reach the requested accuracy.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spinrs
