#pragma once

#include <span>
#include <vector>

#include "liebn/matkernels.hpp"
#include "liebn/parallel.hpp"

namespace liebn {

/// Element of SO(n): R^T R = I, det(R) = +1. Construction re-orthonormalizes
/// via a sign-fixed QR projection when the drift is below 1e-6 and rejects
/// larger drift or negative determinant.
class RotationMatrix {
 public:
  explicit RotationMatrix(Matrix entries);

  static RotationMatrix trusted(Matrix entries);
  static RotationMatrix identity(int dim) { return trusted(Matrix::Identity(dim, dim)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }

 private:
  struct Trusted {};
  RotationMatrix(Matrix entries, Trusted) : m_(std::move(entries)) {}
  Matrix m_;
};

/// Element of so(n), stored as the strictly-upper parameters so antisymmetry
/// is exact by construction.
class SkewMatrix {
 public:
  /// From a full matrix; rejects asymmetry of (A + A^T)/2 beyond tolerance.
  explicit SkewMatrix(const Matrix& entries);

  static SkewMatrix zero(int dim);
  /// Skew-symmetrizes (A - A^T)/2 without validation.
  static SkewMatrix project(const Matrix& entries);
  /// SO(3) generator of the axis-angle vector (wx, wy, wz).
  static SkewMatrix axis_angle(double wx, double wy, double wz);

  int dim() const { return dim_; }
  /// Materializes the full antisymmetric matrix.
  Matrix full() const;
  double norm() const;

 private:
  SkewMatrix(int dim, std::vector<double> upper) : dim_(dim), upper_(std::move(upper)) {}
  int dim_;
  std::vector<double> upper_;  // row-major strict upper triangle
};

struct SoKarcherOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
};

// ---------------------------------------------------------------------------
// Kernels: matrix exp of skew matrices and log of rotations. Dimension 3 uses
// the closed forms, other dimensions the generic series path. Both are
// exposed so they can be cross-checked.
// ---------------------------------------------------------------------------

namespace kern {

/// Scaling-and-squaring Taylor exponential (any square matrix; used on skew).
Matrix exp_series(const Matrix& a);

/// Inverse scaling-and-squaring logarithm: principal square roots
/// (Denman-Beavers) until near identity, then a Taylor log. Requires no
/// eigenvalue on the closed negative real axis; rotation angles within 1e-6
/// of pi raise CutLocusError.
Matrix rot_log_series(const Matrix& rot);

/// Closed-form SO(3) exponential of a skew generator.
Matrix so3_exp(const Matrix& skew);

/// Closed-form SO(3) logarithm; CutLocusError near angle pi.
Matrix so3_log(const Matrix& rot);

/// Dispatching versions.
Matrix rot_exp(const Matrix& skew);
Matrix rot_log(const Matrix& rot);

/// Largest planar rotation angle of R, from the spectrum of (R + R^T)/2.
double max_rotation_angle(const Matrix& rot);

}  // namespace kern

// ---------------------------------------------------------------------------
// Riemannian operators (bi-invariant metric, Lie-algebra representation).
// ---------------------------------------------------------------------------

/// mlog(R^T S); CutLocusError when R^T S has a rotation angle within 1e-6 of pi.
SkewMatrix so_log(const RotationMatrix& r, const RotationMatrix& s);

/// R * mexp(V).
RotationMatrix so_exp(const RotationMatrix& r, const SkewMatrix& v);

/// ||mlog(R^T S)||_F; symmetric and left-invariant.
double so_distance(const RotationMatrix& r, const RotationMatrix& s);

/// R * mexp(t * mlog(R^T S)).
RotationMatrix so_geodesic(const RotationMatrix& r, const RotationMatrix& s, double t);

/// Parallel transport of the ambient tangent H = R V from R to S: S R^T H.
Matrix so_transport(const RotationMatrix& r, const RotationMatrix& s, const Matrix& ambient_h);

/// Projection of an ambient matrix onto the tangent space in Lie-algebra
/// coordinates: skew part of R^T U.
SkewMatrix so_project(const RotationMatrix& r, const Matrix& u);

/// QR retraction of the ambient tangent H = R V, with the triangular factor's
/// diagonal made positive so the result is deterministic.
RotationMatrix so_retract(const RotationMatrix& r, const Matrix& ambient_h);

/// Karcher mean. The batch must sit in a geodesic ball of radius < pi/2
/// around its first element (BallError otherwise).
RotationMatrix so_frechet_mean(std::span<const RotationMatrix> batch,
                               std::span<const double> weights = {},
                               ExecPolicy policy = ExecPolicy::Parallel,
                               const SoKarcherOptions& opts = {});

}  // namespace liebn
