#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pconvex {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or degree mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A form is not in the image of a self-adjoint operator (within tolerance).
class MembershipError : public Error {
 public:
  MembershipError(const std::string& what, double orthogonal_norm)
      : Error(what), orthogonal_norm_(orthogonal_norm) {}
  double orthogonal_norm() const noexcept { return orthogonal_norm_; }

 private:
  double orthogonal_norm_;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Expression text could not be parsed.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownVariable : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

class ArityError : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

/// Evaluation left the real domain of an expression (log of non-positive, ...).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::string subexpression)
      : Error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}
  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

class EmptyDomain : public Error {
 public:
  using Error::Error;
};

class SupportError : public Error {
 public:
  using Error::Error;
};

class NotClosed : public Error {
 public:
  NotClosed(const std::string& what, double relative_norm)
      : Error(what), relative_norm_(relative_norm) {}
  double relative_norm() const noexcept { return relative_norm_; }

 private:
  double relative_norm_;
};

class CohomologyObstruction : public Error {
 public:
  CohomologyObstruction(const std::string& what, double harmonic_norm)
      : Error(what), harmonic_norm_(harmonic_norm) {}
  /// Relative weighted norm of the harmonic projection of the right-hand side.
  double harmonic_norm() const noexcept { return harmonic_norm_; }

 private:
  double harmonic_norm_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class GapAmbiguous : public Error {
 public:
  using Error::Error;
};

class TailError : public Error {
 public:
  using Error::Error;
};

}  // namespace pconvex
