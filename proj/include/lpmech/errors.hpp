#pragma once

#include <stdexcept>
#include <string>

namespace lpmech {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Point outside the chart bounds of a non-periodic coordinate.
class ChartViolation : public Error {
 public:
  using Error::Error;
};

/// Requested derivative order beyond what the map was built to support.
class UnsupportedDerivativeLevel : public Error {
 public:
  using Error::Error;
};

/// Velocity-block Hessian with condition number above the solver threshold.
class SingularHessian : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class AxiomViolation : public Error {
 public:
  using Error::Error;
};

class InvarianceViolation : public Error {
 public:
  using Error::Error;
};

class NotNormal : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpmech
