#include "liebn/backend.hpp"

#include <cmath>
#include <sstream>

#include "liebn/so_geometry.hpp"

namespace liebn {

namespace {

std::vector<double> uniform_or(std::span<const double> weights, std::size_t n, const char* what) {
  if (weights.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (weights.size() != n) throw InvalidInput(std::string(what) + ": weight count mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInput(std::string(what) + ": weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput(std::string(what) + ": weights must sum to 1");
  return {weights.begin(), weights.end()};
}

// ---------------------------------------------------------------------------
// Flat matrix spaces (vector groups under +)
// ---------------------------------------------------------------------------

class FlatBackend : public LieGroupBackend {
 public:
  FlatBackend(int rows, int cols) : rows_(rows), cols_(cols) {}

  int rows() const override { return rows_; }
  int cols() const override { return cols_; }
  Matrix neutral() const override { return Matrix::Zero(rows_, cols_); }
  Matrix compose(const Matrix& a, const Matrix& b) const override { return a + b; }
  Matrix inverse(const Matrix& a) const override { return -a; }
  Matrix log_at_neutral(const Matrix& p) const override { return p; }
  Matrix exp_at_neutral(const Matrix& v) const override { return v; }

  double distance(const Matrix& a, const Matrix& b) const override { return flat_norm(a - b); }

  Matrix frechet_mean(std::span<const Matrix> points, std::span<const double> weights,
                      ExecPolicy) const override {
    const auto w = uniform_or(weights, points.size(), "frechet_mean");
    Matrix acc = Matrix::Zero(rows_, cols_);
    for (std::size_t i = 0; i < points.size(); ++i) acc += w[i] * points[i];
    return acc;
  }

  double frechet_variance(std::span<const Matrix> points, const Matrix& mean,
                          std::span<const double> weights, ExecPolicy policy) const override {
    const auto w = uniform_or(weights, points.size(), "frechet_variance");
    std::vector<double> d2(points.size());
    parallel_for(policy, static_cast<std::int64_t>(points.size()), [&](std::int64_t i) {
      const double d = flat_norm(points[i] - mean);
      d2[i] = d * d;
    });
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) acc += w[i] * d2[i];
    return acc;
  }

  Matrix wfm_pair(const Matrix& p1, const Matrix& p2, double gamma) const override {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("wfm_pair: gamma outside [0, 1]");
    return gamma * p1 + (1.0 - gamma) * p2;
  }

 protected:
  virtual double flat_norm(const Matrix& v) const = 0;
  void check_shape(const Matrix& p, const char* what) const {
    if (p.rows() != rows_ || p.cols() != cols_)
      throw InvalidInput(std::string(what) + ": element shape mismatch");
    if (!p.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
  }

  int rows_;
  int cols_;
};

class EuclideanBackend final : public FlatBackend {
 public:
  explicit EuclideanBackend(int dim) : FlatBackend(dim, 1) {}

  std::string describe() const override {
    return "euclidean(dim=" + std::to_string(rows_) + ")";
  }

  void validate_element(const Matrix& p) const override { check_shape(p, "euclidean"); }

  bool supports_sampling() const override { return true; }
  int codomain_dof() const override { return rows_; }
  Vector to_codomain_coords(const Matrix& p) const override { return p.col(0); }
  Matrix from_codomain_coords(const Vector& c) const override { return c; }

 protected:
  double flat_norm(const Matrix& v) const override { return v.norm(); }
};

class SymSpaceBackend final : public FlatBackend {
 public:
  SymSpaceBackend(int dim, double alpha, double beta)
      : FlatBackend(dim, dim), alpha_(alpha), beta_(beta) {
    if (std::min(alpha_, alpha_ + dim * beta_) <= 0.0)
      throw InvalidMetric("SymSpaceBackend: (alpha, beta) outside the admissible set");
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "sym-space(dim=" << rows_ << ", alpha=" << alpha_ << ", beta=" << beta_ << ")";
    return os.str();
  }

  void validate_element(const Matrix& p) const override {
    check_shape(p, "sym-space");
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol::kSymmetryReject)
      throw InvalidInput("sym-space: element not symmetric");
  }

 protected:
  double flat_norm(const Matrix& v) const override { return ab_norm_raw(v, alpha_, beta_); }

 private:
  double alpha_;
  double beta_;
};

class TrilSpaceBackend final : public FlatBackend {
 public:
  TrilSpaceBackend(int dim, double inner_scale)
      : FlatBackend(dim, dim), norm_scale_(std::sqrt(inner_scale)) {
    if (!(inner_scale > 0.0)) throw InvalidMetric("TrilSpaceBackend: scale must be positive");
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "tril-space(dim=" << rows_ << ", norm_scale=" << norm_scale_ << ")";
    return os.str();
  }

  void validate_element(const Matrix& p) const override {
    check_shape(p, "tril-space");
    Matrix upper = p.triangularView<Eigen::StrictlyUpper>();
    if (upper.cwiseAbs().maxCoeff() > 0.0)
      throw InvalidInput("tril-space: element not lower triangular");
  }

 protected:
  double flat_norm(const Matrix& v) const override { return norm_scale_ * v.norm(); }

 private:
  double norm_scale_;
};

// ---------------------------------------------------------------------------
// SPD backend
// ---------------------------------------------------------------------------

class SpdBackend final : public LieGroupBackend {
 public:
  explicit SpdBackend(const SpdMetric& metric) : m_(metric) {}

  std::string describe() const override {
    std::ostringstream os;
    os << "spd-" << family_name(m_.family()) << "(dim=" << m_.dim() << ", theta=" << m_.theta()
       << ", alpha=" << m_.alpha() << ", beta=" << m_.beta() << ")";
    return os.str();
  }

  int rows() const override { return m_.dim(); }
  int cols() const override { return m_.dim(); }

  Matrix neutral() const override { return Matrix::Identity(m_.dim(), m_.dim()); }

  Matrix compose(const Matrix& a, const Matrix& b) const override {
    return group_compose(m_, SpdMatrix::trusted(a), SpdMatrix::trusted(b)).mat();
  }

  Matrix inverse(const Matrix& a) const override {
    return group_inverse(m_, SpdMatrix::trusted(a)).mat();
  }

  Matrix log_at_neutral(const Matrix& p) const override {
    return log_at(m_, SpdMatrix::identity(m_.dim()), SpdMatrix::trusted(p));
  }

  Matrix exp_at_neutral(const Matrix& v) const override {
    return exp_at(m_, SpdMatrix::identity(m_.dim()), v).mat();
  }

  double distance(const Matrix& a, const Matrix& b) const override {
    return geodesic_distance(m_, SpdMatrix::trusted(a), SpdMatrix::trusted(b));
  }

  Matrix frechet_mean(std::span<const Matrix> points, std::span<const double> weights,
                      ExecPolicy policy) const override {
    return liebn::frechet_mean(to_batch(points), weights, policy).mat();
  }

  double frechet_variance(std::span<const Matrix> points, const Matrix& mean,
                          std::span<const double> weights, ExecPolicy policy) const override {
    return liebn::frechet_variance(to_batch(points), SpdMatrix::trusted(mean), weights, policy);
  }

  Matrix wfm_pair(const Matrix& p1, const Matrix& p2, double gamma) const override {
    return liebn::wfm_pair(m_, SpdMatrix::trusted(p1), SpdMatrix::trusted(p2), gamma).mat();
  }

  void validate_element(const Matrix& p) const override {
    if (p.rows() != m_.dim() || p.cols() != m_.dim())
      throw InvalidInput("spd backend: element shape mismatch");
    SpdMatrix check(p);  // symmetry + positive definiteness
  }

  bool supports_sampling() const override {
    if (m_.family() == SpdFamily::LCM) return true;
    return m_.family() == SpdFamily::LEM && m_.alpha() == 1.0 && m_.beta() == 0.0;
  }

  int codomain_dof() const override {
    require_sampling();
    return m_.dim() * (m_.dim() + 1) / 2;
  }

  Vector to_codomain_coords(const Matrix& p) const override {
    require_sampling();
    const Matrix x = to_codomain(m_, SpdMatrix::trusted(p));
    Vector c(codomain_dof());
    int k = 0;
    if (m_.family() == SpdFamily::LEM) {
      // Orthonormal basis of Sym(n): {E_ii} and {(E_ij + E_ji)/sqrt(2)}.
      for (int i = 0; i < m_.dim(); ++i) c(k++) = x(i, i);
      for (int i = 0; i < m_.dim(); ++i)
        for (int j = i + 1; j < m_.dim(); ++j) c(k++) = x(i, j) * std::sqrt(2.0);
    } else {
      // Tril(n) with the (1/theta^2)-scaled inner product: unit entries / |theta|.
      const double s = 1.0 / std::abs(m_.theta());
      for (int i = 0; i < m_.dim(); ++i)
        for (int j = 0; j <= i; ++j) c(k++) = x(i, j) * s;
    }
    return c;
  }

  Matrix from_codomain_coords(const Vector& c) const override {
    require_sampling();
    if (c.size() != codomain_dof()) throw InvalidInput("from_codomain_coords: wrong size");
    Matrix x = Matrix::Zero(m_.dim(), m_.dim());
    int k = 0;
    if (m_.family() == SpdFamily::LEM) {
      for (int i = 0; i < m_.dim(); ++i) x(i, i) = c(k++);
      for (int i = 0; i < m_.dim(); ++i)
        for (int j = i + 1; j < m_.dim(); ++j) {
          x(i, j) = x(j, i) = c(k++) / std::sqrt(2.0);
        }
    } else {
      const double s = std::abs(m_.theta());
      for (int i = 0; i < m_.dim(); ++i)
        for (int j = 0; j <= i; ++j) x(i, j) = c(k++) * s;
    }
    return from_codomain(m_, x).mat();
  }

  bool has_pullback_route() const override { return true; }

  Matrix pullback_map(const Matrix& p) const override {
    if (m_.family() == SpdFamily::AIM)
      return m_.deformed() ? kern::mpow(p, m_.theta()) : p;
    return to_codomain(m_, SpdMatrix::trusted(p));
  }

  Matrix pullback_unmap(const Matrix& x) const override {
    if (m_.family() == SpdFamily::AIM)
      return m_.deformed() ? kern::mpow(x, 1.0 / m_.theta()) : x;
    return from_codomain(m_, x).mat();
  }

  std::shared_ptr<const LieGroupBackend> pullback_codomain() const override;

 private:
  SpdBatch to_batch(std::span<const Matrix> points) const {
    std::vector<SpdMatrix> pts;
    pts.reserve(points.size());
    for (const Matrix& p : points) pts.push_back(SpdMatrix::trusted(p));
    return SpdBatch(m_, std::move(pts));
  }

  void require_sampling() const {
    if (!supports_sampling())
      throw UnsupportedBackend(describe() + ": not a pullback of an isotropic Euclidean space");
  }

  SpdMetric m_;
};

// ---------------------------------------------------------------------------
// SO(n) backend
// ---------------------------------------------------------------------------

class SoBackend final : public LieGroupBackend {
 public:
  explicit SoBackend(int dim) : dim_(dim) {
    if (dim_ < 2) throw InvalidMetric("so backend: dim must be >= 2");
  }

  std::string describe() const override { return "so(dim=" + std::to_string(dim_) + ")"; }
  int rows() const override { return dim_; }
  int cols() const override { return dim_; }

  Matrix neutral() const override { return Matrix::Identity(dim_, dim_); }
  Matrix compose(const Matrix& a, const Matrix& b) const override { return a * b; }
  Matrix inverse(const Matrix& a) const override { return a.transpose(); }
  Matrix log_at_neutral(const Matrix& p) const override { return kern::rot_log(p); }
  Matrix exp_at_neutral(const Matrix& v) const override {
    return kern::rot_exp(0.5 * (v - v.transpose()));
  }
  double distance(const Matrix& a, const Matrix& b) const override {
    return kern::rot_log(a.transpose() * b).norm();
  }

  Matrix frechet_mean(std::span<const Matrix> points, std::span<const double> weights,
                      ExecPolicy policy) const override {
    std::vector<RotationMatrix> batch;
    batch.reserve(points.size());
    for (const Matrix& p : points) batch.push_back(RotationMatrix::trusted(p));
    return so_frechet_mean(batch, weights, policy).mat();
  }

  double frechet_variance(std::span<const Matrix> points, const Matrix& mean,
                          std::span<const double> weights, ExecPolicy policy) const override {
    const auto w = uniform_or(weights, points.size(), "frechet_variance");
    std::vector<double> d2(points.size());
    parallel_for(policy, static_cast<std::int64_t>(points.size()), [&](std::int64_t i) {
      const double d = distance(points[i], mean);
      d2[i] = d * d;
    });
    double acc = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) acc += w[i] * d2[i];
    return acc;
  }

  Matrix wfm_pair(const Matrix& p1, const Matrix& p2, double gamma) const override {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("wfm_pair: gamma outside [0, 1]");
    const Matrix v = kern::rot_log(p2.transpose() * p1);
    return p2 * kern::rot_exp(gamma * v);
  }

  void validate_element(const Matrix& p) const override {
    if (p.rows() != dim_ || p.cols() != dim_)
      throw InvalidInput("so backend: element shape mismatch");
    RotationMatrix check(p);
  }

 private:
  int dim_;
};

// ---------------------------------------------------------------------------
// Constant metric rescaling (distance *= scale); geodesics, means and group
// structure are unchanged.
// ---------------------------------------------------------------------------

class ScaledMetricBackend final : public LieGroupBackend {
 public:
  ScaledMetricBackend(BackendPtr inner, double scale) : inner_(std::move(inner)), scale_(scale) {
    if (!(scale_ > 0.0)) throw InvalidMetric("ScaledMetricBackend: scale must be positive");
  }

  std::string describe() const override {
    std::ostringstream os;
    os << inner_->describe() << " * dist-scale " << scale_;
    return os.str();
  }

  int rows() const override { return inner_->rows(); }
  int cols() const override { return inner_->cols(); }
  Matrix neutral() const override { return inner_->neutral(); }
  Matrix compose(const Matrix& a, const Matrix& b) const override { return inner_->compose(a, b); }
  Matrix inverse(const Matrix& a) const override { return inner_->inverse(a); }
  Matrix log_at_neutral(const Matrix& p) const override { return inner_->log_at_neutral(p); }
  Matrix exp_at_neutral(const Matrix& v) const override { return inner_->exp_at_neutral(v); }
  double distance(const Matrix& a, const Matrix& b) const override {
    return scale_ * inner_->distance(a, b);
  }
  Matrix frechet_mean(std::span<const Matrix> pts, std::span<const double> w,
                      ExecPolicy policy) const override {
    return inner_->frechet_mean(pts, w, policy);
  }
  double frechet_variance(std::span<const Matrix> pts, const Matrix& mean,
                          std::span<const double> w, ExecPolicy policy) const override {
    return scale_ * scale_ * inner_->frechet_variance(pts, mean, w, policy);
  }
  Matrix wfm_pair(const Matrix& p1, const Matrix& p2, double gamma) const override {
    return inner_->wfm_pair(p1, p2, gamma);
  }
  void validate_element(const Matrix& p) const override { inner_->validate_element(p); }

 private:
  BackendPtr inner_;
  double scale_;
};

std::shared_ptr<const LieGroupBackend> SpdBackend::pullback_codomain() const {
  switch (m_.family()) {
    case SpdFamily::LEM:
      return make_sym_space_backend(m_.dim(), m_.alpha(), m_.beta());
    case SpdFamily::LCM:
      return make_tril_space_backend(m_.dim(), 1.0 / (m_.theta() * m_.theta()));
    case SpdFamily::AIM: {
      const SpdMetric base(SpdFamily::AIM, m_.dim(), 1.0, m_.alpha(), m_.beta());
      BackendPtr codomain = make_spd_backend(base);
      if (!m_.deformed()) return codomain;
      return std::make_shared<ScaledMetricBackend>(std::move(codomain), 1.0 / std::abs(m_.theta()));
    }
  }
  throw UnsupportedBackend("pullback_codomain: unknown family");
}

}  // namespace

BackendPtr make_spd_backend(const SpdMetric& metric) {
  return std::make_shared<SpdBackend>(metric);
}

BackendPtr make_so_backend(int dim) { return std::make_shared<SoBackend>(dim); }

BackendPtr make_euclidean_backend(int dim) {
  if (dim < 1) throw InvalidMetric("euclidean backend: dim must be positive");
  return std::make_shared<EuclideanBackend>(dim);
}

BackendPtr make_sym_space_backend(int dim, double alpha, double beta) {
  return std::make_shared<SymSpaceBackend>(dim, alpha, beta);
}

BackendPtr make_tril_space_backend(int dim, double inner_scale) {
  return std::make_shared<TrilSpaceBackend>(dim, inner_scale);
}

BackendPtr make_backend(const BackendSpec& spec) {
  if (spec.family == "spd-aim")
    return make_spd_backend(SpdMetric(SpdFamily::AIM, spec.dim, spec.theta, spec.alpha, spec.beta));
  if (spec.family == "spd-lem")
    return make_spd_backend(SpdMetric(SpdFamily::LEM, spec.dim, spec.theta, spec.alpha, spec.beta));
  if (spec.family == "spd-lcm")
    return make_spd_backend(SpdMetric(SpdFamily::LCM, spec.dim, spec.theta, spec.alpha, spec.beta));
  if (spec.family == "so") return make_so_backend(spec.dim);
  if (spec.family == "euclidean") return make_euclidean_backend(spec.dim);
  throw InvalidInput("make_backend: unknown family '" + spec.family + "'");
}

}  // namespace liebn
