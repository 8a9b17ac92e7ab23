#pragma once

#include <stdexcept>
#include <string>

namespace invpress {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad dimensions, non-finite entries, unparsable files,
/// singular transformation matrices. CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Which hypothesis of a closed-form result failed.
enum class Hypothesis {
  NonHyperbolic,
  Uncontrollable,
  ComplexSpectrum,
  NotDiagonalizable,
  MissingDiagonalizer,
  ArgminOnBoundary,
  EquilibriumNotInterior,
  ControlTouchesBoundary,
  OrbitLeavesControlSet,
};

inline const char* hypothesis_name(Hypothesis h) {
  switch (h) {
    case Hypothesis::NonHyperbolic: return "non-hyperbolic";
    case Hypothesis::Uncontrollable: return "uncontrollable";
    case Hypothesis::ComplexSpectrum: return "complex spectrum";
    case Hypothesis::NotDiagonalizable: return "not diagonalizable";
    case Hypothesis::MissingDiagonalizer: return "missing diagonalizer";
    case Hypothesis::ArgminOnBoundary: return "argmin on boundary of U";
    case Hypothesis::EquilibriumNotInterior: return "equilibrium not interior to control set";
    case Hypothesis::ControlTouchesBoundary: return "control touches boundary of U";
    case Hypothesis::OrbitLeavesControlSet: return "orbit leaves control set interior";
  }
  return "unknown";
}

/// A mathematical hypothesis of the requested operation does not hold for
/// the given system. CLI exit code 3.
class HypothesisError : public Error {
 public:
  HypothesisError(Hypothesis which, const std::string& detail)
      : Error(std::string(hypothesis_name(which)) + ": " + detail), which_(which) {}
  Hypothesis which() const { return which_; }

 private:
  Hypothesis which_;
};

/// The discretized problem cannot be solved at this resolution (uncoverable
/// grid point, enumeration cap exceeded, steering leaves U, ...).
/// CLI exit code 4.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Internal invariant failure (solver non-convergence and similar).
/// CLI exit code 5.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace invpress
