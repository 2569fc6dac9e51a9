#pragma once

#include <stdexcept>
#include <string>

namespace eqot {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The unit-horizon Gramian is numerically singular.
class UncontrollableError : public Error {
 public:
  UncontrollableError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue(min_eigenvalue) {}
  double min_eigenvalue;
};

/// A point fed to the reduction map does not lie on the equilibrium set.
class OffEquilibriumError : public Error {
 public:
  OffEquilibriumError(const std::string& what, double residual)
      : Error(what), residual(residual) {}
  double residual;
};

/// ker(A) is trivial; nothing to transport over.
class TrivialEquilibriumError : public Error {
 public:
  using Error::Error;
};

/// The reduced cost is not strictly convex.
class NotConvexError : public Error {
 public:
  NotConvexError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue(min_eigenvalue) {}
  double min_eigenvalue;
};

/// A two-point boundary solve failed (singular state-costate transition).
class SteeringError : public Error {
 public:
  using Error::Error;
};

/// Endpoint cost does not have the expected quadratic structure.
class NotQuadraticError : public Error {
 public:
  NotQuadraticError(const std::string& what, double reconstruction_error)
      : Error(what), reconstruction_error(reconstruction_error) {}
  double reconstruction_error;
};

/// Iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual_mu,
                   double residual_nu)
      : Error(what), residual_mu(residual_mu), residual_nu(residual_nu) {}
  double residual_mu;
  double residual_nu;
};

/// Configuration parse failure; `field` is the dotted path of the bad entry.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field(field) {}
  std::string field;
};

}  // namespace eqot
