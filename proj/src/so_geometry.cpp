#include "liebn/so_geometry.hpp"

#include <cmath>
#include <sstream>

namespace liebn {

namespace {

constexpr double kOrthoDriftReject = 1e-6;
constexpr double kCutLocusMargin = 1e-6;

void require_square_finite(const Matrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw InvalidInput(std::string(what) + ": expected a non-empty square matrix");
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

// QR factor with positive triangular diagonal; Q inherits det sign of the input.
Matrix signed_qr_q(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

RotationMatrix::RotationMatrix(Matrix entries) : m_(std::move(entries)) {
  require_square_finite(m_, "RotationMatrix");
  const Eigen::Index n = m_.rows();
  const double drift = (m_.transpose() * m_ - Matrix::Identity(n, n)).norm();
  if (drift > kOrthoDriftReject) {
    std::ostringstream os;
    os << "RotationMatrix: orthogonality drift " << drift << " exceeds " << kOrthoDriftReject;
    throw InvalidInput(os.str());
  }
  if (m_.determinant() < 0.0)
    throw InvalidInput("RotationMatrix: determinant is negative, not a rotation");
  if (drift > 0.0) m_ = signed_qr_q(m_);
}

RotationMatrix RotationMatrix::trusted(Matrix entries) {
  return RotationMatrix(std::move(entries), Trusted{});
}

SkewMatrix::SkewMatrix(const Matrix& entries) : dim_(static_cast<int>(entries.rows())) {
  require_square_finite(entries, "SkewMatrix");
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  if ((entries + entries.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInput("SkewMatrix: input not antisymmetric");
  upper_.reserve(static_cast<std::size_t>(dim_) * (dim_ - 1) / 2);
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) upper_.push_back(0.5 * (entries(i, j) - entries(j, i)));
}

SkewMatrix SkewMatrix::zero(int dim) {
  return SkewMatrix(dim, std::vector<double>(static_cast<std::size_t>(dim) * (dim - 1) / 2, 0.0));
}

SkewMatrix SkewMatrix::project(const Matrix& entries) {
  const int n = static_cast<int>(entries.rows());
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) upper.push_back(0.5 * (entries(i, j) - entries(j, i)));
  return SkewMatrix(n, std::move(upper));
}

SkewMatrix SkewMatrix::axis_angle(double wx, double wy, double wz) {
  Matrix v = Matrix::Zero(3, 3);
  v(0, 1) = -wz;
  v(0, 2) = wy;
  v(1, 2) = -wx;
  v(1, 0) = wz;
  v(2, 0) = -wy;
  v(2, 1) = wx;
  return SkewMatrix::project(v);
}

Matrix SkewMatrix::full() const {
  Matrix out = Matrix::Zero(dim_, dim_);
  std::size_t k = 0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) {
      out(i, j) = upper_[k];
      out(j, i) = -upper_[k];
      ++k;
    }
  return out;
}

double SkewMatrix::norm() const {
  double s = 0.0;
  for (double u : upper_) s += u * u;
  return std::sqrt(2.0 * s);
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

namespace kern {

Matrix exp_series(const Matrix& a) {
  const Eigen::Index n = a.rows();
  int squarings = 0;
  double scale = a.norm();
  while (scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const Matrix w = a / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(n, n);
  Matrix acc = term;
  for (int k = 1; k <= 30; ++k) {
    term = (term * w) / static_cast<double>(k);
    acc += term;
    if (term.norm() < 1e-18 * std::max(1.0, acc.norm())) break;
  }
  for (int s = 0; s < squarings; ++s) acc = acc * acc;
  return acc;
}

double max_rotation_angle(const Matrix& rot) {
  const Matrix s = 0.5 * (rot + rot.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const double c = std::clamp(es.eigenvalues()(0), -1.0, 1.0);
  return std::acos(c);
}

namespace {

// Principal square root via the Denman-Beavers iteration. Valid for matrices
// with no eigenvalue on the closed negative real axis.
Matrix sqrt_db(const Matrix& a) {
  Matrix y = a;
  Matrix z = Matrix::Identity(a.rows(), a.cols());
  for (int it = 0; it < 60; ++it) {
    const Matrix y_next = 0.5 * (y + z.inverse());
    const Matrix z_next = 0.5 * (z + y.inverse());
    const double delta = (y_next - y).norm();
    y = y_next;
    z = z_next;
    if (delta < 1e-15 * std::max(1.0, y.norm())) break;
  }
  return y;
}

Matrix log_taylor_near_identity(const Matrix& a) {
  const Eigen::Index n = a.rows();
  const Matrix x = a - Matrix::Identity(n, n);
  Matrix power = x;
  Matrix acc = Matrix::Zero(n, n);
  for (int k = 1; k <= 60; ++k) {
    const double coeff = (k % 2 == 1) ? 1.0 / k : -1.0 / k;
    acc += coeff * power;
    if (power.norm() / k < 1e-18) break;
    power = power * x;
  }
  return acc;
}

}  // namespace

Matrix rot_log_series(const Matrix& rot) {
  const double angle = max_rotation_angle(rot);
  if (angle > M_PI - kCutLocusMargin) {
    std::ostringstream os;
    os << "rotation logarithm: angle " << angle << " within " << kCutLocusMargin << " of pi";
    throw CutLocusError(os.str());
  }
  Matrix a = rot;
  int halvings = 0;
  const Eigen::Index n = rot.rows();
  while ((a - Matrix::Identity(n, n)).norm() > 0.25 && halvings < 40) {
    a = sqrt_db(a);
    ++halvings;
  }
  Matrix x = log_taylor_near_identity(a) * std::pow(2.0, halvings);
  return 0.5 * (x - x.transpose());  // exact skew projection kills roundoff drift
}

Matrix so3_exp(const Matrix& skew) {
  const double wx = skew(2, 1);
  const double wy = skew(0, 2);
  const double wz = skew(1, 0);
  const double theta = std::sqrt(wx * wx + wy * wy + wz * wz);
  double c1;  // sin(t)/t
  double c2;  // (1-cos(t))/t^2
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    c1 = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    c2 = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    c1 = std::sin(theta) / theta;
    c2 = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Matrix::Identity(3, 3) + c1 * skew + c2 * (skew * skew);
}

Matrix so3_log(const Matrix& rot) {
  const double cos_theta = std::clamp(0.5 * (rot.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  if (theta > M_PI - kCutLocusMargin) {
    std::ostringstream os;
    os << "rotation logarithm: angle " << theta << " within " << kCutLocusMargin << " of pi";
    throw CutLocusError(os.str());
  }
  const Matrix anti = 0.5 * (rot - rot.transpose());
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    return anti * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  return anti * (theta / std::sin(theta));
}

Matrix rot_exp(const Matrix& skew) { return skew.rows() == 3 ? so3_exp(skew) : exp_series(skew); }

Matrix rot_log(const Matrix& rot) { return rot.rows() == 3 ? so3_log(rot) : rot_log_series(rot); }

}  // namespace kern

// ---------------------------------------------------------------------------
// Riemannian operators
// ---------------------------------------------------------------------------

namespace {

void check_same_dim(const RotationMatrix& r, const RotationMatrix& s, const char* what) {
  if (r.dim() != s.dim()) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

void check_ambient_tangent(const RotationMatrix& r, const Matrix& h, const char* what) {
  if (h.rows() != r.dim() || h.cols() != r.dim())
    throw InvalidInput(std::string(what) + ": tangent shape mismatch");
  const Matrix v = r.mat().transpose() * h;
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if ((v + v.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw InvalidInput(std::string(what) + ": H is not of the form R*V with V skew");
}

}  // namespace

SkewMatrix so_log(const RotationMatrix& r, const RotationMatrix& s) {
  check_same_dim(r, s, "so_log");
  return SkewMatrix::project(kern::rot_log(r.mat().transpose() * s.mat()));
}

RotationMatrix so_exp(const RotationMatrix& r, const SkewMatrix& v) {
  if (v.dim() != r.dim()) throw InvalidInput("so_exp: dimension mismatch");
  return RotationMatrix::trusted(r.mat() * kern::rot_exp(v.full()));
}

double so_distance(const RotationMatrix& r, const RotationMatrix& s) {
  check_same_dim(r, s, "so_distance");
  return kern::rot_log(r.mat().transpose() * s.mat()).norm();
}

RotationMatrix so_geodesic(const RotationMatrix& r, const RotationMatrix& s, double t) {
  check_same_dim(r, s, "so_geodesic");
  const Matrix v = kern::rot_log(r.mat().transpose() * s.mat());
  return RotationMatrix::trusted(r.mat() * kern::rot_exp(t * v));
}

Matrix so_transport(const RotationMatrix& r, const RotationMatrix& s, const Matrix& ambient_h) {
  check_same_dim(r, s, "so_transport");
  check_ambient_tangent(r, ambient_h, "so_transport");
  return s.mat() * r.mat().transpose() * ambient_h;
}

SkewMatrix so_project(const RotationMatrix& r, const Matrix& u) {
  if (u.rows() != r.dim() || u.cols() != r.dim())
    throw InvalidInput("so_project: shape mismatch");
  return SkewMatrix::project(r.mat().transpose() * u);
}

RotationMatrix so_retract(const RotationMatrix& r, const Matrix& ambient_h) {
  check_ambient_tangent(r, ambient_h, "so_retract");
  const Matrix a = r.mat() + ambient_h;
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix rfac = qr.matrixQR().triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, a.norm());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (std::abs(rfac(j, j)) < 1e-12 * scale)
      throw RetractError("so_retract: R + H is rank deficient");
  Matrix q = qr.householderQ();
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    if (rfac(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0)
    throw RetractError("so_retract: retraction left SO(n)");
  return RotationMatrix::trusted(std::move(q));
}

RotationMatrix so_frechet_mean(std::span<const RotationMatrix> batch,
                               std::span<const double> weights, ExecPolicy policy,
                               const SoKarcherOptions& opts) {
  if (batch.empty()) throw InvalidInput("so_frechet_mean: empty batch");
  const std::size_t n = batch.size();
  std::vector<double> w;
  if (weights.empty()) {
    w.assign(n, 1.0 / static_cast<double>(n));
  } else {
    if (weights.size() != n) throw InvalidInput("so_frechet_mean: weight count mismatch");
    double sum = 0.0;
    for (double x : weights) {
      if (!(x > 0.0)) throw InvalidInput("so_frechet_mean: weights must be positive");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw InvalidInput("so_frechet_mean: weights must sum to 1");
    w.assign(weights.begin(), weights.end());
  }
  for (std::size_t i = 1; i < n; ++i) {
    check_same_dim(batch[0], batch[i], "so_frechet_mean");
    if (so_distance(batch[0], batch[i]) >= M_PI / 2.0)
      throw BallError("so_frechet_mean: batch leaves the geodesic ball of radius pi/2");
  }

  RotationMatrix mean = batch[0];
  std::vector<Matrix> logs(n);
  double residual = 0.0;
  const int dim = batch[0].dim();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    parallel_for(policy, static_cast<std::int64_t>(n), [&](std::int64_t i) {
      logs[i] = kern::rot_log(mean.mat().transpose() * batch[i].mat());
    });
    Matrix step = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < n; ++i) step += w[i] * logs[i];
    residual = step.norm();
    if (residual < opts.tolerance) return mean;
    mean = RotationMatrix::trusted(mean.mat() * kern::rot_exp(step));
  }
  throw ConvergenceError("so_frechet_mean: Karcher flow did not converge", mean.mat(), residual);
}

}  // namespace liebn
