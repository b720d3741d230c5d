#pragma once

#include <utility>

#include <Eigen/Dense>

#include "liebn/errors.hpp"

namespace liebn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
/// Asymmetry beyond this is rejected instead of silently symmetrized.
inline constexpr double kSymmetryReject = 1e-8;
/// Cholesky pivot below this counts as numerically non-positive-definite.
inline constexpr double kCholPivot = 1e-14;
/// Eigenvalue-closeness scale: the divided-difference kernel switches to the
/// derivative branch when |s_i - s_j| <= kEigClose * max(1, |s_i|, |s_j|).
inline constexpr double kEigClose = 1e-10;
}  // namespace tol

// ---------------------------------------------------------------------------
// Domain types. Values are immutable after construction and safe to share
// across threads.
// ---------------------------------------------------------------------------

/// Dense real symmetric matrix. Construction symmetrizes (S + S^T)/2 and
/// rejects asymmetry beyond tol::kSymmetryReject or non-finite entries.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix entries);

  /// Wraps a matrix that is symmetric by construction; only symmetrizes.
  static SymMatrix trusted(Matrix entries);
  static SymMatrix zero(int dim) { return trusted(Matrix::Zero(dim, dim)); }
  static SymMatrix identity(int dim) { return trusted(Matrix::Identity(dim, dim)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }

 private:
  struct Trusted {};
  SymMatrix(Matrix entries, Trusted) : m_(std::move(entries)) {}
  Matrix m_;
};

/// Symmetric positive definite matrix. Construction additionally verifies
/// positive definiteness (Cholesky pivots) and fails with DomainError.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix entries);
  explicit SpdMatrix(const SymMatrix& s) : SpdMatrix(s.mat()) {}

  /// Wraps a matrix that is SPD by construction; only symmetrizes.
  static SpdMatrix trusted(Matrix entries);
  static SpdMatrix identity(int dim) { return trusted(Matrix::Identity(dim, dim)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  SymMatrix as_sym() const { return SymMatrix::trusted(m_); }

 private:
  struct Trusted {};
  SpdMatrix(Matrix entries, Trusted) : m_(std::move(entries)) {}
  Matrix m_;
};

/// Lower triangular matrix; entries above the diagonal are exactly zero.
/// The diagonal is unrestricted in sign (Cholesky factors keep it positive
/// by construction, codomain points of clog may not).
class LowerTriMatrix {
 public:
  explicit LowerTriMatrix(Matrix entries);

  /// Keeps only the lower triangle of the argument.
  static LowerTriMatrix from_lower(const Matrix& entries);
  static LowerTriMatrix zero(int dim) { return from_lower(Matrix::Zero(dim, dim)); }
  static LowerTriMatrix identity(int dim) { return from_lower(Matrix::Identity(dim, dim)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }

 private:
  struct Trusted {};
  LowerTriMatrix(Matrix entries, Trusted) : m_(std::move(entries)) {}
  Matrix m_;
};

/// Eigendecomposition S = U diag(s) U^T with eigenvalues sorted descending
/// and each eigenvector's first non-negligible component made positive, so
/// the factorization is deterministic for a fixed input.
struct EigPair {
  Matrix eigvecs;
  Vector eigvals;
};

// ---------------------------------------------------------------------------
// Scalar functions lifted to the spectrum.
// ---------------------------------------------------------------------------

/// Scalar function applied to eigenvalues: exp, log, or pow(theta).
class ScalarFun {
 public:
  enum class Kind { Exp, Log, Pow };

  static ScalarFun exp() { return ScalarFun(Kind::Exp, 0.0); }
  static ScalarFun log() { return ScalarFun(Kind::Log, 0.0); }
  static ScalarFun pow(double exponent) { return ScalarFun(Kind::Pow, exponent); }

  Kind kind() const { return kind_; }
  double exponent() const { return exponent_; }

  double operator()(double x) const;
  double deriv(double x) const;
  /// log always; pow unless the exponent is a non-negative integer.
  bool requires_spd() const;
  const char* label() const;

 private:
  ScalarFun(Kind k, double e) : kind_(k), exponent_(e) {}
  Kind kind_;
  double exponent_;
};

// ---------------------------------------------------------------------------
// Operations (typed surface).
// ---------------------------------------------------------------------------

EigPair sym_eigendecompose(const SymMatrix& s);

/// U f(diag) U^T. Throws DomainError when f requires an SPD spectrum and the
/// input has an eigenvalue <= 0.
SymMatrix spd_fun(const SymMatrix& s, const ScalarFun& f);
SymMatrix spd_fun(const SpdMatrix& p, const ScalarFun& f);

/// Vector-Jacobian product of S -> f(S) via the divided-difference kernel
/// K_ij = (f(s_i)-f(s_j))/(s_i-s_j), with f'(s_i) on near-equal pairs:
/// returns U [K o (U^T G U)] U^T.
SymMatrix spd_fun_vjp(const SpdMatrix& p, const ScalarFun& f, const SymMatrix& upstream_grad);

/// Lower Cholesky factor with strictly positive diagonal.
LowerTriMatrix cholesky(const SpdMatrix& p);

/// Splits L into (strictly lower part, diagonal part).
std::pair<LowerTriMatrix, LowerTriMatrix> tril_parts(const LowerTriMatrix& l);

/// clog(P) = strict_lower(L) + log(diag(L)) for L = chol(P). Global chart of
/// the SPD manifold onto lower triangular matrices.
LowerTriMatrix clog(const SpdMatrix& p);

/// Inverse chart: L = strict_lower(X) + exp(diag(X)), returns L L^T.
SpdMatrix clog_inv(const LowerTriMatrix& x);

// ---------------------------------------------------------------------------
// Raw kernels on Eigen matrices. Inputs are trusted (no validation); these
// are the hot paths the geometry modules build on.
// ---------------------------------------------------------------------------

namespace kern {

EigPair eig_sym(const Matrix& sym);

/// U [K o (U^T A U)] U^T with A symmetric. With inverse=true applies the
/// reciprocal kernel 1/K (the differential of the inverse matrix function).
Matrix dk_apply(const EigPair& e, const ScalarFun& f, const Matrix& sym_arg, bool inverse = false);

Matrix fun(const Matrix& sym, const ScalarFun& f);
Matrix mlog(const Matrix& spd);
Matrix mexp(const Matrix& sym);
Matrix mpow(const Matrix& spd, double theta);

/// Plain lower Cholesky; DomainError on a pivot below tol::kCholPivot.
Matrix chol(const Matrix& spd);

Matrix clog(const Matrix& spd);
Matrix clog_inv(const Matrix& tril);

/// Strictly lower part plus half the diagonal.
Matrix half_lower(const Matrix& a);

/// Differential of L -> L L^T at L applied to lower triangular X: X L^T + L X^T.
Matrix chol_inv_pushforward(const Matrix& chol_l, const Matrix& tril_x);

/// Its inverse, the differential of P -> chol(P): maps symmetric V at P = L L^T
/// to the lower triangular L * half_lower(L^{-1} V L^{-T}).
Matrix chol_pushforward(const Matrix& chol_l, const Matrix& sym_v);

/// Differential of the diagonal-log chart tril -> tril at factor L
/// (strict part identity, diagonal divided by diag(L)), and its inverse.
Matrix diag_log_pushforward(const Matrix& chol_l, const Matrix& tril_x);
Matrix diag_log_pushforward_inv(const Matrix& chol_l, const Matrix& tril_y);

}  // namespace kern

}  // namespace liebn
