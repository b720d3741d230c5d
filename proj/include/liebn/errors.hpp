#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace liebn {

/// Base class for all library errors. The CLI maps these to exit code 3,
/// configuration problems to exit code 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* name() const noexcept { return "Error"; }
};

/// Malformed input: non-finite entries, shape mismatch, asymmetry beyond
/// tolerance, invalid weights or parameters.
class InvalidInput : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "InvalidInput"; }
};

/// Input outside the mathematical domain of an operation (e.g. log of a
/// non-SPD matrix, non-positive Cholesky pivot).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "DomainError"; }
};

/// Metric parameters outside the admissible set, e.g. min(alpha, alpha+n*beta) <= 0
/// or theta == 0.
class InvalidMetric : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "InvalidMetric"; }
};

/// Fixed-point iteration (Karcher flow) failed to reach tolerance within the
/// iteration cap. Carries the last iterate and the residual norm.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::MatrixXd last_iterate, double residual)
      : Error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}
  const char* name() const noexcept override { return "ConvergenceError"; }
  const Eigen::MatrixXd& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Eigen::MatrixXd last_iterate_;
  double residual_;
};

/// Rotation logarithm requested at (or within 1e-6 of) a rotation angle of pi,
/// where the principal branch is not unique.
class CutLocusError : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "CutLocusError"; }
};

/// QR retraction failed (rank-deficient R + H or orientation flip).
class RetractError : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "RetractError"; }
};

/// Rotation batch not contained in a geodesic ball of radius < pi/2.
class BallError : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "BallError"; }
};

/// Domain id without a registered state in a domain-specific bank.
class UnknownDomain : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "UnknownDomain"; }
};

/// Operation requested on a backend that does not support it
/// (e.g. Gaussian sampling on a backend that is not pullback-Euclidean).
class UnsupportedBackend : public Error {
 public:
  using Error::Error;
  const char* name() const noexcept override { return "UnsupportedBackend"; }
};

}  // namespace liebn
