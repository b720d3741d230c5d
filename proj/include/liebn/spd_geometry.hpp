#pragma once

#include <optional>
#include <span>
#include <vector>

#include "liebn/matkernels.hpp"
#include "liebn/parallel.hpp"

namespace liebn {

/// The three Lie group structures on the SPD manifold.
enum class SpdFamily { AIM, LEM, LCM };

const char* family_name(SpdFamily f);

/// Metric-family selector: family plus the deformation factor theta and the
/// O(n)-invariant inner-product parameters (alpha, beta). Single source of
/// geometric truth for everything in this module.
///
/// Admissibility: min(alpha, alpha + dim*beta) > 0 and theta != 0. LEM fixes
/// theta = 1 (deforming it is a no-op on the metric); LCM fixes
/// (alpha, beta) = (1, 0) (its codomain norm is plain Frobenius).
class SpdMetric {
 public:
  SpdMetric(SpdFamily family, int dim, double theta = 1.0, double alpha = 1.0, double beta = 0.0);

  SpdFamily family() const { return family_; }
  int dim() const { return dim_; }
  double theta() const { return theta_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  bool deformed() const { return theta_ != 1.0; }

 private:
  SpdFamily family_;
  int dim_;
  double theta_;
  double alpha_;
  double beta_;
};

/// A batch of SPD points under one metric. Non-empty, uniform dimension.
struct SpdBatch {
  SpdBatch(SpdMetric metric, std::vector<SpdMatrix> points);
  SpdMetric metric;
  std::vector<SpdMatrix> points;
};

/// Frechet mean and variance of a batch.
struct BatchStats {
  SpdMatrix mean;
  double variance = 0.0;
};

struct KarcherOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
};

// ---------------------------------------------------------------------------
// Tangent representation
//
// Tangent vectors are dense matrices in a family-dependent chart:
//   AIM, LEM — symmetric matrices (ambient representation);
//   LCM      — lower triangular matrices, the tangent at L = chol(P) of the
//              Cholesky factor manifold.
// tangent_to_sym / tangent_from_sym convert between the family chart and the
// ambient symmetric representation.
// ---------------------------------------------------------------------------

/// <V,W> = alpha * Frobenius(V, W) + beta * tr(V) * tr(W) on Sym(n).
double ab_inner(const SymMatrix& v, const SymMatrix& w, double alpha, double beta);
double ab_norm_raw(const Matrix& v, double alpha, double beta);

/// Riemannian inner product at P in the family tangent chart.
double metric_inner_at(const SpdMetric& m, const SpdMatrix& p, const Matrix& v, const Matrix& w);

double geodesic_distance(const SpdMetric& m, const SpdMatrix& p, const SpdMatrix& q);

SpdMatrix group_identity(const SpdMetric& m);
SpdMatrix group_compose(const SpdMetric& m, const SpdMatrix& q, const SpdMatrix& p);
SpdMatrix group_inverse(const SpdMetric& m, const SpdMatrix& p);

/// Riemannian logarithm at base, in the family tangent chart.
Matrix log_at(const SpdMetric& m, const SpdMatrix& base, const SpdMatrix& target);

/// Riemannian exponential at base; right inverse of log_at.
SpdMatrix exp_at(const SpdMetric& m, const SpdMatrix& base, const Matrix& tangent);

/// Ambient symmetric representative of a chart tangent (for LCM this applies
/// the differential X -> X L^T + L X^T of L -> L L^T).
Matrix tangent_to_sym(const SpdMetric& m, const SpdMatrix& base, const Matrix& tangent);
Matrix tangent_from_sym(const SpdMetric& m, const SpdMatrix& base, const Matrix& sym);

/// Weighted Frechet mean. Weights must be positive and sum to 1 (within
/// 1e-12); empty means uniform. Closed form for LEM/LCM, Karcher flow for
/// AIM (ConvergenceError carries the last iterate on failure).
SpdMatrix frechet_mean(const SpdBatch& batch, std::span<const double> weights = {},
                       ExecPolicy policy = ExecPolicy::Parallel,
                       const KarcherOptions& opts = {});

/// Weighted sum of squared distances to the mean.
double frechet_variance(const SpdBatch& batch, const SpdMatrix& mean,
                        std::span<const double> weights = {},
                        ExecPolicy policy = ExecPolicy::Parallel);

/// Two-point weighted Frechet mean with weight gamma on p1 (gamma in [0,1]).
SpdMatrix wfm_pair(const SpdMetric& m, const SpdMatrix& p1, const SpdMatrix& p2, double gamma);

// ---------------------------------------------------------------------------
// Euclidean codomain chart (LEM and LCM are pullbacks of Euclidean spaces;
// AIM is not). Distances and means can be computed as plain linear algebra
// on chart images.
// ---------------------------------------------------------------------------

bool has_euclidean_codomain(const SpdMetric& m);

/// LEM: mlog(P) in Sym(n).  LCM: clog(P^theta) in Tril(n).
Matrix to_codomain(const SpdMetric& m, const SpdMatrix& p);
SpdMatrix from_codomain(const SpdMetric& m, const Matrix& x);

/// Norm of a codomain displacement: the (alpha,beta) norm for LEM,
/// Frobenius/|theta| for LCM.
double codomain_norm(const SpdMetric& m, const Matrix& x);

/// Distance of the deformed log-Euclidean evaluation path,
/// |1/theta| * ||mlog(P^theta) - mlog(Q^theta)||_(alpha,beta). Equal to the
/// undeformed LEM distance for every admissible theta.
double lem_deformed_distance(const SpdMatrix& p, const SpdMatrix& q, double theta, double alpha,
                             double beta);

}  // namespace liebn
