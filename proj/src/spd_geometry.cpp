#include "liebn/spd_geometry.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace liebn {

const char* family_name(SpdFamily f) {
  switch (f) {
    case SpdFamily::AIM:
      return "aim";
    case SpdFamily::LEM:
      return "lem";
    case SpdFamily::LCM:
      return "lcm";
  }
  return "?";
}

SpdMetric::SpdMetric(SpdFamily family, int dim, double theta, double alpha, double beta)
    : family_(family), dim_(dim), theta_(theta), alpha_(alpha), beta_(beta) {
  if (dim_ < 1) throw InvalidMetric("SpdMetric: dim must be positive");
  if (theta_ == 0.0) throw InvalidMetric("SpdMetric: theta must be nonzero");
  if (family_ == SpdFamily::LEM && theta_ != 1.0)
    throw InvalidMetric("SpdMetric: LEM fixes theta = 1 (deformation is a no-op)");
  if (family_ == SpdFamily::LCM && (alpha_ != 1.0 || beta_ != 0.0))
    throw InvalidMetric("SpdMetric: LCM fixes (alpha, beta) = (1, 0)");
  if (std::min(alpha_, alpha_ + dim_ * beta_) <= 0.0) {
    std::ostringstream os;
    os << "SpdMetric: (alpha, beta) = (" << alpha_ << ", " << beta_
       << ") violates min(alpha, alpha + dim*beta) > 0 at dim " << dim_;
    throw InvalidMetric(os.str());
  }
}

SpdBatch::SpdBatch(SpdMetric m, std::vector<SpdMatrix> pts)
    : metric(m), points(std::move(pts)) {
  if (points.empty()) throw InvalidInput("SpdBatch: empty batch");
  for (const auto& p : points)
    if (p.dim() != metric.dim()) throw InvalidInput("SpdBatch: point dimension mismatch");
}

namespace {

void check_dim(const SpdMetric& m, const SpdMatrix& p, const char* what) {
  if (p.dim() != m.dim()) {
    std::ostringstream os;
    os << what << ": point dimension " << p.dim() << " != metric dimension " << m.dim();
    throw InvalidInput(os.str());
  }
}

Matrix check_sym_tangent(const SpdMetric& m, const Matrix& v, const char* what) {
  if (v.rows() != m.dim() || v.cols() != m.dim())
    throw InvalidInput(std::string(what) + ": tangent shape mismatch");
  const double asym = (v - v.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol::kSymmetryReject)
    throw InvalidInput(std::string(what) + ": tangent not symmetric");
  return 0.5 * (v + v.transpose());
}

Matrix check_tril_tangent(const SpdMetric& m, const Matrix& v, const char* what) {
  if (v.rows() != m.dim() || v.cols() != m.dim())
    throw InvalidInput(std::string(what) + ": tangent shape mismatch");
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  Matrix upper = v.triangularView<Eigen::StrictlyUpper>();
  if (upper.cwiseAbs().maxCoeff() > tol::kSymmetryReject * scale)
    throw InvalidInput(std::string(what) + ": LCM tangent not lower triangular");
  return v.triangularView<Eigen::Lower>();
}

Matrix check_tangent(const SpdMetric& m, const Matrix& v, const char* what) {
  return m.family() == SpdFamily::LCM ? check_tril_tangent(m, v, what)
                                      : check_sym_tangent(m, v, what);
}

std::vector<double> resolve_weights(std::span<const double> weights, std::size_t n,
                                    const char* what) {
  if (weights.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (weights.size() != n) throw InvalidInput(std::string(what) + ": weight count mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInput(std::string(what) + ": weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InvalidInput(std::string(what) + ": weights must sum to 1");
  return {weights.begin(), weights.end()};
}

double inv_theta_abs(const SpdMetric& m) { return 1.0 / std::abs(m.theta()); }

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// ----- affine-invariant building blocks (theta = 1) -----

double aim_inner_base(const Matrix& p, const Matrix& v, const Matrix& w, double alpha,
                      double beta) {
  Eigen::LLT<Matrix> llt(p);
  const Matrix pinv_v = llt.solve(v);
  const Matrix pinv_w = llt.solve(w);
  return alpha * (pinv_v * pinv_w).trace() + beta * pinv_v.trace() * pinv_w.trace();
}

Matrix aim_compose_base(const Matrix& q, const Matrix& p) {
  const Matrix k = kern::chol(q);
  return sym(k * p * k.transpose());
}

Matrix aim_inverse_base(const Matrix& p) {
  // The group inverse K^{-1} K^{-T} (whose Cholesky factor is K^{-1}), not
  // the matrix inverse K^{-T} K^{-1}.
  const Matrix k = kern::chol(p);
  const Matrix kinv = k.triangularView<Eigen::Lower>().solve(Matrix::Identity(p.rows(), p.cols()));
  return sym(kinv * kinv.transpose());
}

Matrix aim_log_base(const Matrix& p, const Matrix& q) {
  const Matrix ph = kern::mpow(p, 0.5);
  const Matrix pnh = kern::mpow(p, -0.5);
  return sym(ph * kern::mlog(sym(pnh * q * pnh)) * ph);
}

Matrix aim_exp_base(const Matrix& p, const Matrix& v) {
  const Matrix ph = kern::mpow(p, 0.5);
  const Matrix pnh = kern::mpow(p, -0.5);
  return sym(ph * kern::mexp(sym(pnh * v * pnh)) * ph);
}

Matrix aim_geodesic_base(const Matrix& from, const Matrix& to, double t) {
  const Matrix fh = kern::mpow(from, 0.5);
  const Matrix fnh = kern::mpow(from, -0.5);
  return sym(fh * kern::mpow(sym(fnh * to * fnh), t) * fh);
}

// Differential of P -> P^theta at p applied to ambient symmetric v (and its
// inverse when invert = true).
Matrix pow_pushforward(const Matrix& p, double theta, const Matrix& v, bool invert) {
  const EigPair e = kern::eig_sym(p);
  return kern::dk_apply(e, ScalarFun::pow(theta), v, invert);
}

// ----- LCM chart tangent chain -----

// Chart tangent at chol(p) -> codomain displacement in Tril(n).
Matrix lcm_chart_to_codomain(const SpdMetric& m, const Matrix& p, const Matrix& x) {
  const Matrix l = kern::chol(p);
  if (!m.deformed()) return kern::diag_log_pushforward(l, x);
  const Matrix v = kern::chol_inv_pushforward(l, x);
  const Matrix v_theta = pow_pushforward(p, m.theta(), v, false);
  const Matrix p_theta = kern::mpow(p, m.theta());
  const Matrix l_theta = kern::chol(p_theta);
  return kern::diag_log_pushforward(l_theta, kern::chol_pushforward(l_theta, v_theta));
}

// Codomain displacement -> chart tangent at chol(p).
Matrix lcm_codomain_to_chart(const SpdMetric& m, const Matrix& p, const Matrix& d) {
  if (!m.deformed()) {
    const Matrix l = kern::chol(p);
    return kern::diag_log_pushforward_inv(l, d);
  }
  const Matrix p_theta = kern::mpow(p, m.theta());
  const Matrix l_theta = kern::chol(p_theta);
  const Matrix x_theta = kern::diag_log_pushforward_inv(l_theta, d);
  const Matrix v_theta = kern::chol_inv_pushforward(l_theta, x_theta);
  const Matrix v = pow_pushforward(p, m.theta(), v_theta, true);
  const Matrix l = kern::chol(p);
  return kern::chol_pushforward(l, v);
}

}  // namespace

// ---------------------------------------------------------------------------
// Inner products and distances
// ---------------------------------------------------------------------------

double ab_inner(const SymMatrix& v, const SymMatrix& w, double alpha, double beta) {
  if (v.dim() != w.dim()) throw InvalidInput("ab_inner: dimension mismatch");
  const int n = v.dim();
  if (std::min(alpha, alpha + n * beta) <= 0.0)
    throw InvalidMetric("ab_inner: (alpha, beta) outside the admissible set");
  return alpha * (v.mat().array() * w.mat().array()).sum() + beta * v.mat().trace() * w.mat().trace();
}

double ab_norm_raw(const Matrix& v, double alpha, double beta) {
  const double fro2 = v.squaredNorm();
  const double tr = v.trace();
  return std::sqrt(alpha * fro2 + beta * tr * tr);
}

double metric_inner_at(const SpdMetric& m, const SpdMatrix& p, const Matrix& v_in,
                       const Matrix& w_in) {
  check_dim(m, p, "metric_inner_at");
  const Matrix v = check_tangent(m, v_in, "metric_inner_at");
  const Matrix w = check_tangent(m, w_in, "metric_inner_at");
  switch (m.family()) {
    case SpdFamily::LEM: {
      const EigPair e = kern::eig_sym(p.mat());
      const Matrix dv = kern::dk_apply(e, ScalarFun::log(), v);
      const Matrix dw = kern::dk_apply(e, ScalarFun::log(), w);
      return ab_inner(SymMatrix::trusted(dv), SymMatrix::trusted(dw), m.alpha(), m.beta());
    }
    case SpdFamily::AIM: {
      if (!m.deformed())
        return aim_inner_base(p.mat(), v, w, m.alpha(), m.beta());
      const Matrix p_theta = kern::mpow(p.mat(), m.theta());
      const Matrix dv = pow_pushforward(p.mat(), m.theta(), v, false);
      const Matrix dw = pow_pushforward(p.mat(), m.theta(), w, false);
      return aim_inner_base(p_theta, dv, dw, m.alpha(), m.beta()) / (m.theta() * m.theta());
    }
    case SpdFamily::LCM: {
      Matrix x = v;
      Matrix y = w;
      Matrix l = kern::chol(p.mat());
      if (m.deformed()) {
        // Evaluate the pulled-back Cholesky metric at chol(P^theta).
        const Matrix p_theta = kern::mpow(p.mat(), m.theta());
        const Matrix vx = pow_pushforward(p.mat(), m.theta(), kern::chol_inv_pushforward(l, x), false);
        const Matrix vy = pow_pushforward(p.mat(), m.theta(), kern::chol_inv_pushforward(l, y), false);
        l = kern::chol(p_theta);
        x = kern::chol_pushforward(l, vx);
        y = kern::chol_pushforward(l, vy);
      }
      double acc = 0.0;
      for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < i; ++j) acc += x(i, j) * y(i, j);
      for (int j = 0; j < m.dim(); ++j) acc += x(j, j) * y(j, j) / (l(j, j) * l(j, j));
      return m.deformed() ? acc / (m.theta() * m.theta()) : acc;
    }
  }
  return 0.0;
}

double geodesic_distance(const SpdMetric& m, const SpdMatrix& p, const SpdMatrix& q) {
  check_dim(m, p, "geodesic_distance");
  check_dim(m, q, "geodesic_distance");
  switch (m.family()) {
    case SpdFamily::LEM:
      return ab_norm_raw(kern::mlog(p.mat()) - kern::mlog(q.mat()), m.alpha(), m.beta());
    case SpdFamily::AIM: {
      const Matrix q_nht = kern::mpow(q.mat(), -0.5 * m.theta());
      const Matrix p_t = m.deformed() ? kern::mpow(p.mat(), m.theta()) : p.mat();
      const Matrix middle = kern::mlog(sym(q_nht * p_t * q_nht));
      return inv_theta_abs(m) * ab_norm_raw(middle, m.alpha(), m.beta());
    }
    case SpdFamily::LCM:
      return (to_codomain(m, p) - to_codomain(m, q)).norm() * inv_theta_abs(m);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Group structure
// ---------------------------------------------------------------------------

SpdMatrix group_identity(const SpdMetric& m) { return SpdMatrix::identity(m.dim()); }

SpdMatrix group_compose(const SpdMetric& m, const SpdMatrix& q, const SpdMatrix& p) {
  check_dim(m, q, "group_compose");
  check_dim(m, p, "group_compose");
  switch (m.family()) {
    case SpdFamily::LEM:
      return SpdMatrix::trusted(kern::mexp(kern::mlog(p.mat()) + kern::mlog(q.mat())));
    case SpdFamily::AIM: {
      if (!m.deformed()) return SpdMatrix::trusted(aim_compose_base(q.mat(), p.mat()));
      const Matrix q_t = kern::mpow(q.mat(), m.theta());
      const Matrix p_t = kern::mpow(p.mat(), m.theta());
      return SpdMatrix::trusted(kern::mpow(aim_compose_base(q_t, p_t), 1.0 / m.theta()));
    }
    case SpdFamily::LCM:
      return from_codomain(m, to_codomain(m, p) + to_codomain(m, q));
  }
  return p;
}

SpdMatrix group_inverse(const SpdMetric& m, const SpdMatrix& p) {
  check_dim(m, p, "group_inverse");
  switch (m.family()) {
    case SpdFamily::LEM:
      return SpdMatrix::trusted(kern::mexp(-kern::mlog(p.mat())));
    case SpdFamily::AIM: {
      if (!m.deformed()) return SpdMatrix::trusted(aim_inverse_base(p.mat()));
      const Matrix p_t = kern::mpow(p.mat(), m.theta());
      return SpdMatrix::trusted(kern::mpow(aim_inverse_base(p_t), 1.0 / m.theta()));
    }
    case SpdFamily::LCM:
      return from_codomain(m, -to_codomain(m, p));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Riemannian log / exp
// ---------------------------------------------------------------------------

Matrix log_at(const SpdMetric& m, const SpdMatrix& base, const SpdMatrix& target) {
  check_dim(m, base, "log_at");
  check_dim(m, target, "log_at");
  switch (m.family()) {
    case SpdFamily::LEM: {
      const Matrix delta = kern::mlog(target.mat()) - kern::mlog(base.mat());
      return kern::dk_apply(kern::eig_sym(base.mat()), ScalarFun::log(), delta, /*inverse=*/true);
    }
    case SpdFamily::AIM: {
      if (!m.deformed()) return aim_log_base(base.mat(), target.mat());
      const Matrix b_t = kern::mpow(base.mat(), m.theta());
      const Matrix t_t = kern::mpow(target.mat(), m.theta());
      return pow_pushforward(base.mat(), m.theta(), aim_log_base(b_t, t_t), /*invert=*/true);
    }
    case SpdFamily::LCM: {
      const Matrix d = to_codomain(m, target) - to_codomain(m, base);
      return lcm_codomain_to_chart(m, base.mat(), d);
    }
  }
  return Matrix::Zero(m.dim(), m.dim());
}

SpdMatrix exp_at(const SpdMetric& m, const SpdMatrix& base, const Matrix& tangent_in) {
  check_dim(m, base, "exp_at");
  const Matrix tangent = check_tangent(m, tangent_in, "exp_at");
  switch (m.family()) {
    case SpdFamily::LEM: {
      const Matrix dv = kern::dk_apply(kern::eig_sym(base.mat()), ScalarFun::log(), tangent);
      return SpdMatrix::trusted(kern::mexp(kern::mlog(base.mat()) + dv));
    }
    case SpdFamily::AIM: {
      if (!m.deformed()) return SpdMatrix::trusted(aim_exp_base(base.mat(), tangent));
      const Matrix b_t = kern::mpow(base.mat(), m.theta());
      const Matrix v_t = pow_pushforward(base.mat(), m.theta(), tangent, false);
      return SpdMatrix::trusted(kern::mpow(aim_exp_base(b_t, v_t), 1.0 / m.theta()));
    }
    case SpdFamily::LCM: {
      const Matrix d = lcm_chart_to_codomain(m, base.mat(), tangent);
      return from_codomain(m, to_codomain(m, base) + d);
    }
  }
  return base;
}

Matrix tangent_to_sym(const SpdMetric& m, const SpdMatrix& base, const Matrix& tangent) {
  check_dim(m, base, "tangent_to_sym");
  const Matrix t = check_tangent(m, tangent, "tangent_to_sym");
  if (m.family() != SpdFamily::LCM) return t;
  return kern::chol_inv_pushforward(kern::chol(base.mat()), t);
}

Matrix tangent_from_sym(const SpdMetric& m, const SpdMatrix& base, const Matrix& sym_v) {
  check_dim(m, base, "tangent_from_sym");
  const Matrix v = check_sym_tangent(m, sym_v, "tangent_from_sym");
  if (m.family() != SpdFamily::LCM) return v;
  return kern::chol_pushforward(kern::chol(base.mat()), v);
}

// ---------------------------------------------------------------------------
// Frechet statistics
// ---------------------------------------------------------------------------

namespace {

SpdMatrix frechet_mean_karcher(const SpdBatch& batch, const std::vector<double>& w,
                               ExecPolicy policy, const KarcherOptions& opts) {
  const SpdMetric& m = batch.metric;
  const std::size_t n = batch.points.size();
  // Weighted arithmetic mean is SPD and a serviceable starting point.
  Matrix init = Matrix::Zero(m.dim(), m.dim());
  for (std::size_t i = 0; i < n; ++i) init += w[i] * batch.points[i].mat();
  SpdMatrix mean = SpdMatrix::trusted(init);

  std::vector<Matrix> logs(n);
  double residual = 0.0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    parallel_for(policy, static_cast<std::int64_t>(n),
                 [&](std::int64_t i) { logs[i] = log_at(m, mean, batch.points[i]); });
    Matrix step = Matrix::Zero(m.dim(), m.dim());
    for (std::size_t i = 0; i < n; ++i) step += w[i] * logs[i];
    residual = step.norm();
    if (residual < opts.tolerance) return mean;
    mean = exp_at(m, mean, step);
  }
  throw ConvergenceError("frechet_mean: Karcher flow did not converge", mean.mat(), residual);
}

}  // namespace

SpdMatrix frechet_mean(const SpdBatch& batch, std::span<const double> weights, ExecPolicy policy,
                       const KarcherOptions& opts) {
  const std::vector<double> w = resolve_weights(weights, batch.points.size(), "frechet_mean");
  const SpdMetric& m = batch.metric;
  if (m.family() == SpdFamily::AIM) return frechet_mean_karcher(batch, w, policy, opts);

  const std::size_t n = batch.points.size();
  std::vector<Matrix> imgs(n);
  parallel_for(policy, static_cast<std::int64_t>(n),
               [&](std::int64_t i) { imgs[i] = to_codomain(m, batch.points[i]); });
  Matrix acc = Matrix::Zero(m.dim(), m.dim());
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * imgs[i];
  return from_codomain(m, acc);
}

double frechet_variance(const SpdBatch& batch, const SpdMatrix& mean,
                        std::span<const double> weights, ExecPolicy policy) {
  const std::vector<double> w = resolve_weights(weights, batch.points.size(), "frechet_variance");
  const std::size_t n = batch.points.size();
  std::vector<double> d2(n);
  parallel_for(policy, static_cast<std::int64_t>(n), [&](std::int64_t i) {
    const double d = geodesic_distance(batch.metric, batch.points[i], mean);
    d2[i] = d * d;
  });
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * d2[i];
  return acc;
}

SpdMatrix wfm_pair(const SpdMetric& m, const SpdMatrix& p1, const SpdMatrix& p2, double gamma) {
  check_dim(m, p1, "wfm_pair");
  check_dim(m, p2, "wfm_pair");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("wfm_pair: gamma outside [0, 1]");
  if (m.family() == SpdFamily::AIM) {
    // Geodesic from p2 to p1 at parameter gamma, evaluated in the deformed
    // codomain.
    if (!m.deformed())
      return SpdMatrix::trusted(aim_geodesic_base(p2.mat(), p1.mat(), gamma));
    const Matrix a = kern::mpow(p2.mat(), m.theta());
    const Matrix b = kern::mpow(p1.mat(), m.theta());
    return SpdMatrix::trusted(kern::mpow(aim_geodesic_base(a, b, gamma), 1.0 / m.theta()));
  }
  return from_codomain(m, gamma * to_codomain(m, p1) + (1.0 - gamma) * to_codomain(m, p2));
}

// ---------------------------------------------------------------------------
// Codomain chart
// ---------------------------------------------------------------------------

bool has_euclidean_codomain(const SpdMetric& m) { return m.family() != SpdFamily::AIM; }

Matrix to_codomain(const SpdMetric& m, const SpdMatrix& p) {
  check_dim(m, p, "to_codomain");
  switch (m.family()) {
    case SpdFamily::LEM:
      return kern::mlog(p.mat());
    case SpdFamily::LCM:
      return m.deformed() ? kern::clog(kern::mpow(p.mat(), m.theta())) : kern::clog(p.mat());
    case SpdFamily::AIM:
      throw UnsupportedBackend("to_codomain: AIM has no Euclidean codomain");
  }
  return p.mat();
}

SpdMatrix from_codomain(const SpdMetric& m, const Matrix& x) {
  switch (m.family()) {
    case SpdFamily::LEM:
      return SpdMatrix::trusted(kern::mexp(sym(x)));
    case SpdFamily::LCM: {
      const Matrix p_theta = kern::clog_inv(x);
      return SpdMatrix::trusted(m.deformed() ? kern::mpow(p_theta, 1.0 / m.theta()) : p_theta);
    }
    case SpdFamily::AIM:
      throw UnsupportedBackend("from_codomain: AIM has no Euclidean codomain");
  }
  return SpdMatrix::identity(m.dim());
}

double codomain_norm(const SpdMetric& m, const Matrix& x) {
  switch (m.family()) {
    case SpdFamily::LEM:
      return ab_norm_raw(x, m.alpha(), m.beta());
    case SpdFamily::LCM:
      return x.norm() * inv_theta_abs(m);
    case SpdFamily::AIM:
      throw UnsupportedBackend("codomain_norm: AIM has no Euclidean codomain");
  }
  return 0.0;
}

double lem_deformed_distance(const SpdMatrix& p, const SpdMatrix& q, double theta, double alpha,
                             double beta) {
  if (theta == 0.0) throw InvalidMetric("lem_deformed_distance: theta must be nonzero");
  const Matrix delta = kern::mlog(kern::mpow(p.mat(), theta)) - kern::mlog(kern::mpow(q.mat(), theta));
  return ab_norm_raw(delta, alpha, beta) / std::abs(theta);
}

}  // namespace liebn
