#pragma once

#include <stdexcept>
#include <string>

namespace wgstokes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An element with (numerically) zero measure.
class DegenerateElement : public Error {
 public:
  DegenerateElement(int element, const std::string& what)
      : Error(what), element_(element) {}
  int element() const noexcept { return element_; }

 private:
  int element_;
};

class DisconnectedMesh : public Error {
 public:
  using Error::Error;
};

/// Lanczos/Arnoldi breakdown that is not a lucky (converged) breakdown.
class SolverBreakdown : public Error {
 public:
  SolverBreakdown(int iteration, const std::string& what)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Negative curvature in CG, or a pivot <= 0 in a Cholesky-type factorization.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// The solver used for the velocity block inside a preconditioner or a
/// Schur-complement product did not converge.
class InnerSolveFailure : public Error {
 public:
  InnerSolveFailure(int iterations, const std::string& what)
      : Error(what), iterations_(iterations) {}
  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

class EigenSolverFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace wgstokes
