#include "liebn/matkernels.hpp"

#include <cmath>
#include <sstream>

namespace liebn {

namespace {

void require_square_finite(const Matrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw InvalidInput(os.str());
  }
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

}  // namespace

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

SymMatrix::SymMatrix(Matrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "SymMatrix");
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol::kSymmetryReject) {
    std::ostringstream os;
    os << "SymMatrix: asymmetry " << asym << " exceeds " << tol::kSymmetryReject;
    throw InvalidInput(os.str());
  }
  m_ = 0.5 * (m_ + m_.transpose()).eval();
}

SymMatrix SymMatrix::trusted(Matrix entries) {
  Matrix s = 0.5 * (entries + entries.transpose());
  return SymMatrix(std::move(s), Trusted{});
}

SpdMatrix::SpdMatrix(Matrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "SpdMatrix");
  const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol::kSymmetryReject) {
    std::ostringstream os;
    os << "SpdMatrix: asymmetry " << asym << " exceeds " << tol::kSymmetryReject;
    throw InvalidInput(os.str());
  }
  m_ = 0.5 * (m_ + m_.transpose()).eval();
  kern::chol(m_);  // positive definiteness check, throws DomainError
}

SpdMatrix SpdMatrix::trusted(Matrix entries) {
  Matrix s = 0.5 * (entries + entries.transpose());
  return SpdMatrix(std::move(s), Trusted{});
}

LowerTriMatrix::LowerTriMatrix(Matrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "LowerTriMatrix");
  for (Eigen::Index i = 0; i < m_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m_.cols(); ++j)
      if (m_(i, j) != 0.0)
        throw InvalidInput("LowerTriMatrix: nonzero entry above the diagonal");
}

LowerTriMatrix LowerTriMatrix::from_lower(const Matrix& entries) {
  Matrix l = entries.triangularView<Eigen::Lower>();
  return LowerTriMatrix(std::move(l), Trusted{});
}

// ---------------------------------------------------------------------------
// Scalar functions
// ---------------------------------------------------------------------------

double ScalarFun::operator()(double x) const {
  switch (kind_) {
    case Kind::Exp:
      return std::exp(x);
    case Kind::Log:
      return std::log(x);
    case Kind::Pow:
      return std::pow(x, exponent_);
  }
  return 0.0;
}

double ScalarFun::deriv(double x) const {
  switch (kind_) {
    case Kind::Exp:
      return std::exp(x);
    case Kind::Log:
      return 1.0 / x;
    case Kind::Pow:
      return exponent_ * std::pow(x, exponent_ - 1.0);
  }
  return 0.0;
}

bool ScalarFun::requires_spd() const {
  if (kind_ == Kind::Log) return true;
  if (kind_ == Kind::Pow) {
    const bool integral = exponent_ == std::floor(exponent_);
    return !(integral && exponent_ >= 0.0);
  }
  return false;
}

const char* ScalarFun::label() const {
  switch (kind_) {
    case Kind::Exp:
      return "exp";
    case Kind::Log:
      return "log";
    case Kind::Pow:
      return "pow";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Raw kernels
// ---------------------------------------------------------------------------

namespace kern {

EigPair eig_sym(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw DomainError("eig_sym: eigendecomposition failed to converge");
  const Eigen::Index n = sym.rows();
  // Eigen returns ascending order; flip to descending and fix signs.
  EigPair out;
  out.eigvecs.resize(n, n);
  out.eigvals.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigvals(k) = solver.eigenvalues()(n - 1 - k);
    out.eigvecs.col(k) = solver.eigenvectors().col(n - 1 - k);
    const double peak = out.eigvecs.col(k).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = out.eigvecs(i, k);
      if (std::abs(v) > 1e-12 * peak) {
        if (v < 0.0) out.eigvecs.col(k) = -out.eigvecs.col(k);
        break;
      }
    }
  }
  return out;
}

namespace {

void require_spectrum(const EigPair& e, const ScalarFun& f, const char* what) {
  if (f.requires_spd() && e.eigvals(e.eigvals.size() - 1) <= 0.0) {
    std::ostringstream os;
    os << what << ": " << f.label() << " needs a positive spectrum, smallest eigenvalue "
       << e.eigvals(e.eigvals.size() - 1);
    throw DomainError(os.str());
  }
}

}  // namespace

Matrix dk_apply(const EigPair& e, const ScalarFun& f, const Matrix& sym_arg, bool inverse) {
  const Eigen::Index n = e.eigvals.size();
  Matrix b = e.eigvecs.transpose() * sym_arg * e.eigvecs;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double si = e.eigvals(i);
      const double sj = e.eigvals(j);
      const double gap_tol = tol::kEigClose * std::max({1.0, std::abs(si), std::abs(sj)});
      double k;
      if (std::abs(si - sj) > gap_tol)
        k = (f(si) - f(sj)) / (si - sj);
      else
        k = f.deriv(si);
      b(i, j) = inverse ? b(i, j) / k : b(i, j) * k;
    }
  }
  Matrix out = e.eigvecs * b * e.eigvecs.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

Matrix fun(const Matrix& sym, const ScalarFun& f) {
  const EigPair e = eig_sym(sym);
  require_spectrum(e, f, "spd_fun");
  Vector mapped(e.eigvals.size());
  for (Eigen::Index i = 0; i < mapped.size(); ++i) mapped(i) = f(e.eigvals(i));
  Matrix out = e.eigvecs * mapped.asDiagonal() * e.eigvecs.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

Matrix mlog(const Matrix& spd) { return fun(spd, ScalarFun::log()); }
Matrix mexp(const Matrix& sym) { return fun(sym, ScalarFun::exp()); }
Matrix mpow(const Matrix& spd, double theta) { return fun(spd, ScalarFun::pow(theta)); }

Matrix chol(const Matrix& spd) {
  const Eigen::Index n = spd.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = spd(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot < tol::kCholPivot) {
      std::ostringstream os;
      os << "cholesky: pivot " << pivot << " at column " << j << " below " << tol::kCholPivot;
      throw DomainError(os.str());
    }
    const double djj = std::sqrt(pivot);
    l(j, j) = djj;
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (spd(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / djj;
  }
  return l;
}

Matrix clog(const Matrix& spd) {
  Matrix l = chol(spd);
  for (Eigen::Index j = 0; j < l.cols(); ++j) l(j, j) = std::log(l(j, j));
  return l;
}

Matrix clog_inv(const Matrix& tril) {
  Matrix l = tril.triangularView<Eigen::StrictlyLower>();
  for (Eigen::Index j = 0; j < l.cols(); ++j) l(j, j) = std::exp(tril(j, j));
  return l * l.transpose();
}

Matrix half_lower(const Matrix& a) {
  Matrix out = a.triangularView<Eigen::StrictlyLower>();
  out.diagonal() = 0.5 * a.diagonal();
  return out;
}

Matrix chol_inv_pushforward(const Matrix& chol_l, const Matrix& tril_x) {
  return tril_x * chol_l.transpose() + chol_l * tril_x.transpose();
}

Matrix chol_pushforward(const Matrix& chol_l, const Matrix& sym_v) {
  // L^{-1} V L^{-T} via two triangular solves.
  Matrix a = chol_l.triangularView<Eigen::Lower>().solve(sym_v);
  Matrix b = chol_l.triangularView<Eigen::Lower>().solve(a.transpose()).transpose();
  return chol_l * half_lower(b);
}

Matrix diag_log_pushforward(const Matrix& chol_l, const Matrix& tril_x) {
  Matrix out = tril_x.triangularView<Eigen::Lower>();
  out.diagonal().array() /= chol_l.diagonal().array();
  return out;
}

Matrix diag_log_pushforward_inv(const Matrix& chol_l, const Matrix& tril_y) {
  Matrix out = tril_y.triangularView<Eigen::Lower>();
  out.diagonal().array() *= chol_l.diagonal().array();
  return out;
}

}  // namespace kern

// ---------------------------------------------------------------------------
// Typed surface
// ---------------------------------------------------------------------------

EigPair sym_eigendecompose(const SymMatrix& s) { return kern::eig_sym(s.mat()); }

SymMatrix spd_fun(const SymMatrix& s, const ScalarFun& f) {
  return SymMatrix::trusted(kern::fun(s.mat(), f));
}

SymMatrix spd_fun(const SpdMatrix& p, const ScalarFun& f) {
  return SymMatrix::trusted(kern::fun(p.mat(), f));
}

SymMatrix spd_fun_vjp(const SpdMatrix& p, const ScalarFun& f, const SymMatrix& upstream_grad) {
  if (upstream_grad.dim() != p.dim())
    throw InvalidInput("spd_fun_vjp: gradient dimension mismatch");
  const EigPair e = kern::eig_sym(p.mat());
  if (f.requires_spd() && e.eigvals(e.eigvals.size() - 1) <= 0.0)
    throw DomainError("spd_fun_vjp: function needs a positive spectrum");
  return SymMatrix::trusted(kern::dk_apply(e, f, upstream_grad.mat()));
}

LowerTriMatrix cholesky(const SpdMatrix& p) {
  return LowerTriMatrix::from_lower(kern::chol(p.mat()));
}

std::pair<LowerTriMatrix, LowerTriMatrix> tril_parts(const LowerTriMatrix& l) {
  Matrix strict = l.mat().triangularView<Eigen::StrictlyLower>();
  Matrix diag = Matrix(l.mat().diagonal().asDiagonal());
  return {LowerTriMatrix::from_lower(strict), LowerTriMatrix::from_lower(diag)};
}

LowerTriMatrix clog(const SpdMatrix& p) {
  return LowerTriMatrix::from_lower(kern::clog(p.mat()));
}

SpdMatrix clog_inv(const LowerTriMatrix& x) {
  if (!x.mat().allFinite()) throw InvalidInput("clog_inv: non-finite entries");
  return SpdMatrix::trusted(kern::clog_inv(x.mat()));
}

}  // namespace liebn
