#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace fctl {

/// Base class for solver failures that callers may want to distinguish from
/// programming errors (std::logic_error) or bad input (std::invalid_argument).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The instance violates c·E[Y] < g (or A'(1) < g for generalized queues).
class StabilityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The chosen integration circle does not satisfy the integrand's validity
/// conditions (|Y(z)/z| < 1 and |A(z)/z^g| < 1 on the circle, no branch
/// crossings of the logarithm).
class ContourValidityError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Trapezoidal refinement did not settle before the node cap.
class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, std::complex<double> previous,
                   std::complex<double> last)
      : SolverError(what), previous_(previous), last_(last) {}

  std::complex<double> previous() const { return previous_; }
  std::complex<double> last() const { return last_; }

 private:
  std::complex<double> previous_;
  std::complex<double> last_;
};

/// Root set failed one of its certification checks.
class CertificationError : public SolverError {
 public:
  CertificationError(const std::string& what, int found, int expected,
                     int winding_count)
      : SolverError(what),
        found_(found),
        expected_(expected),
        winding_count_(winding_count) {}

  int found() const { return found_; }
  int expected() const { return expected_; }
  int winding_count() const { return winding_count_; }

 private:
  int found_;
  int expected_;
  int winding_count_;
};

/// A distribution needed more support than the configured cap allows.
class TruncationError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace fctl
