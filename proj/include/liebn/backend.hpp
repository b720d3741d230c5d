#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "liebn/matkernels.hpp"
#include "liebn/parallel.hpp"
#include "liebn/spd_geometry.hpp"

namespace liebn {

/// Capability record of a Lie group with a left-invariant metric: neutral
/// element, group operations, exp/log at the neutral element, distance and
/// Frechet statistics. Group elements and tangents travel as plain dense
/// matrices in the backend's own representation.
class LieGroupBackend {
 public:
  virtual ~LieGroupBackend() = default;

  virtual std::string describe() const = 0;
  virtual int rows() const = 0;
  virtual int cols() const = 0;

  virtual Matrix neutral() const = 0;
  virtual Matrix compose(const Matrix& a, const Matrix& b) const = 0;  // a (.) b
  virtual Matrix inverse(const Matrix& a) const = 0;
  virtual Matrix log_at_neutral(const Matrix& p) const = 0;
  virtual Matrix exp_at_neutral(const Matrix& v) const = 0;
  virtual double distance(const Matrix& a, const Matrix& b) const = 0;

  virtual Matrix frechet_mean(std::span<const Matrix> points, std::span<const double> weights,
                              ExecPolicy policy) const = 0;
  virtual double frechet_variance(std::span<const Matrix> points, const Matrix& mean,
                                  std::span<const double> weights, ExecPolicy policy) const = 0;
  /// Two-point weighted mean with weight gamma on p1.
  virtual Matrix wfm_pair(const Matrix& p1, const Matrix& p2, double gamma) const = 0;

  /// exp_E(s * log_E(p)), the dispersion-scaling map.
  virtual Matrix scale_from_neutral(const Matrix& p, double s) const {
    return exp_at_neutral(s * log_at_neutral(p));
  }

  /// Validates that p is a representable group element; throws on failure.
  virtual void validate_element(const Matrix& p) const = 0;

  // --- Gaussian sampling support: exact sampling needs a global isometry
  // onto a Euclidean space (coordinates in an orthonormal basis). ---
  virtual bool supports_sampling() const { return false; }
  virtual int codomain_dof() const {
    throw UnsupportedBackend(describe() + ": no Euclidean codomain coordinates");
  }
  virtual Vector to_codomain_coords(const Matrix&) const {
    throw UnsupportedBackend(describe() + ": no Euclidean codomain coordinates");
  }
  virtual Matrix from_codomain_coords(const Vector&) const {
    throw UnsupportedBackend(describe() + ": no Euclidean codomain coordinates");
  }

  // --- Pullback route: a diffeomorphism f onto a codomain group in which
  // the same normalization can be computed (map, normalize, map back). ---
  virtual bool has_pullback_route() const { return false; }
  virtual Matrix pullback_map(const Matrix&) const {
    throw UnsupportedBackend(describe() + ": no pullback route");
  }
  virtual Matrix pullback_unmap(const Matrix&) const {
    throw UnsupportedBackend(describe() + ": no pullback route");
  }
  virtual std::shared_ptr<const LieGroupBackend> pullback_codomain() const {
    throw UnsupportedBackend(describe() + ": no pullback route");
  }
};

using BackendPtr = std::shared_ptr<const LieGroupBackend>;

/// SPD manifold under one of the three metric families.
BackendPtr make_spd_backend(const SpdMetric& metric);

/// SO(n) with the bi-invariant metric.
BackendPtr make_so_backend(int dim);

/// Euclidean space R^n (elements are n x 1 column vectors).
BackendPtr make_euclidean_backend(int dim);

/// Flat matrix spaces used as pullback codomains: Sym(n) with the
/// (alpha,beta) inner product, Tril(n) with a scaled Frobenius inner product.
BackendPtr make_sym_space_backend(int dim, double alpha, double beta);
BackendPtr make_tril_space_backend(int dim, double inner_scale);

/// Parsed backend description, shared by the CLI and state serialization.
struct BackendSpec {
  std::string family;  // spd-aim | spd-lem | spd-lcm | so | euclidean
  int dim = 2;
  double theta = 1.0;
  double alpha = 1.0;
  double beta = 0.0;
};

BackendPtr make_backend(const BackendSpec& spec);

}  // namespace liebn
