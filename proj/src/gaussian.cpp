#include "liebn/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "liebn/philox.hpp"

namespace liebn {

GaussianParams make_gaussian(BackendPtr backend, Matrix mean, double sigma) {
  if (!backend) throw InvalidInput("gaussian: null backend");
  if (!(sigma > 0.0)) throw InvalidInput("gaussian: sigma must be positive");
  backend->validate_element(mean);
  return GaussianParams{std::move(backend), std::move(mean), sigma};
}

double log_density_unnorm(const GaussianParams& p, const Matrix& x) {
  const double d = p.backend->distance(x, p.mean);
  return -d * d / (2.0 * p.sigma * p.sigma);
}

std::vector<Matrix> sample(const GaussianParams& p, int n, std::uint64_t seed,
                           std::uint32_t stream, ExecPolicy policy) {
  if (n < 1) throw InvalidInput("sample: n must be >= 1");
  if (!p.backend->supports_sampling())
    throw UnsupportedBackend(p.backend->describe() +
                             ": exact Gaussian sampling needs a pullback-Euclidean backend");
  const int dof = p.backend->codomain_dof();
  const Vector center = p.backend->to_codomain_coords(p.mean);
  const NormalStream rng(seed, stream);
  std::vector<Matrix> out(static_cast<std::size_t>(n));
  parallel_for(policy, n, [&](std::int64_t i) {
    Vector c(dof);
    for (int k = 0; k < dof; ++k)
      c(k) = center(k) + p.sigma * rng.normal(static_cast<std::uint64_t>(i), k);
    out[static_cast<std::size_t>(i)] = p.backend->from_codomain_coords(c);
  });
  return out;
}

SampleReport summarize_samples(const GaussianParams& p, std::span<const Matrix> samples,
                               std::uint64_t seed, ExecPolicy policy) {
  SampleReport r;
  r.n_samples = static_cast<long>(samples.size());
  r.seed = seed;
  r.empirical_mean = p.backend->frechet_mean(samples, {}, policy);
  r.empirical_variance = p.backend->frechet_variance(samples, r.empirical_mean, {}, policy);
  r.mean_dist_to_target = p.backend->distance(r.empirical_mean, p.mean);
  const int dof = p.backend->codomain_dof();
  r.mc_standard_error = p.sigma * std::sqrt(static_cast<double>(dof) / samples.size());
  r.analytic_variance = dof * p.sigma * p.sigma;
  return r;
}

HomogeneityReport verify_homogeneity(const GaussianParams& p, const Matrix& b, int n,
                                     std::uint64_t seed, ExecPolicy policy) {
  p.backend->validate_element(b);
  std::vector<Matrix> xs = sample(p, n, seed, /*stream=*/0, policy);
  parallel_for(policy, static_cast<std::int64_t>(xs.size()),
               [&](std::int64_t i) { xs[i] = p.backend->compose(b, xs[i]); });
  GaussianParams shifted = p;
  shifted.mean = p.backend->compose(b, p.mean);
  HomogeneityReport r;
  r.translated = summarize_samples(shifted, xs, seed, policy);
  r.mean_shift = r.translated.mean_dist_to_target;
  r.variance_ratio = r.translated.empirical_variance / r.translated.analytic_variance;
  r.pass = r.mean_shift < 3.0 * r.translated.mc_standard_error && r.variance_ratio >= 0.95 &&
           r.variance_ratio <= 1.05;
  return r;
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  // Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
  double q = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * q, 0.0, 1.0);
}

ScalingReport verify_scaling_law(const GaussianParams& p, double s, int n, std::uint64_t seed,
                                 double alpha, ExecPolicy policy) {
  if (s == 0.0) throw InvalidInput("verify_scaling_law: s must be nonzero");
  const Matrix e = p.backend->neutral();
  if (p.backend->distance(p.mean, e) > 1e-9)
    throw InvalidInput("verify_scaling_law: the Gaussian must be centered at the neutral element");

  const std::vector<Matrix> xs = sample(p, n, seed, /*stream=*/0, policy);
  std::vector<Matrix> ys(xs.size());
  parallel_for(policy, static_cast<std::int64_t>(xs.size()),
               [&](std::int64_t i) { ys[i] = p.backend->scale_from_neutral(xs[i], s); });

  ScalingReport r;
  {
    const Matrix mean_x = p.backend->frechet_mean(xs, {}, policy);
    const Matrix mean_y = p.backend->frechet_mean(ys, {}, policy);
    const double var_x = p.backend->frechet_variance(xs, mean_x, {}, policy);
    const double var_y = p.backend->frechet_variance(ys, mean_y, {}, policy);
    r.variance_ratio = var_y / var_x;

    double disp_x = 0.0;
    double disp_y = 0.0;
    std::vector<double> dx(xs.size());
    std::vector<double> dy(xs.size());
    parallel_for(policy, static_cast<std::int64_t>(xs.size()), [&](std::int64_t i) {
      dx[i] = p.backend->distance(xs[i], e);
      dy[i] = p.backend->distance(ys[i], e);
    });
    for (std::size_t i = 0; i < xs.size(); ++i) {
      disp_x += dx[i] * dx[i];
      disp_y += dy[i] * dy[i];
    }
    r.dispersion_about_e_ratio = disp_y / disp_x;
  }

  // Per-coordinate two-sample KS against fresh draws of the claimed law.
  GaussianParams target = p;
  target.sigma = std::abs(s) * p.sigma;
  const std::vector<Matrix> fresh = sample(target, n, seed, /*stream=*/1, policy);
  const int dof = p.backend->codomain_dof();
  std::vector<std::vector<double>> coords_y(dof, std::vector<double>(ys.size()));
  std::vector<std::vector<double>> coords_f(dof, std::vector<double>(fresh.size()));
  parallel_for(policy, static_cast<std::int64_t>(ys.size()), [&](std::int64_t i) {
    const Vector cy = p.backend->to_codomain_coords(ys[i]);
    const Vector cf = p.backend->to_codomain_coords(fresh[i]);
    for (int k = 0; k < dof; ++k) {
      coords_y[k][i] = cy(k);
      coords_f[k][i] = cf(k);
    }
  });
  r.min_ks_pvalue = 1.0;
  for (int k = 0; k < dof; ++k)
    r.min_ks_pvalue = std::min(r.min_ks_pvalue, ks_two_sample_pvalue(coords_y[k], coords_f[k]));
  r.bonferroni_level = alpha / dof;

  const double s2 = s * s;
  r.variance_pass = r.variance_ratio >= 0.95 * s2 && r.variance_ratio <= 1.05 * s2;
  r.ks_pass = r.min_ks_pvalue >= r.bonferroni_level;
  r.pass = r.variance_pass && r.ks_pass;
  return r;
}

namespace {

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t r = 0; r < idx.size(); ++r) rank[idx[r]] = static_cast<double>(r);
    return rank;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double mean = (n - 1) / 2.0;
  double num = 0.0;
  double dx2 = 0.0;
  double dy2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (rx[i] - mean) * (ry[i] - mean);
    dx2 += (rx[i] - mean) * (rx[i] - mean);
    dy2 += (ry[i] - mean) * (ry[i] - mean);
  }
  return num / std::sqrt(dx2 * dy2);
}

}  // namespace

double density_shell_rank_correlation(const GaussianParams& p, int n, std::uint64_t seed,
                                      int shells, ExecPolicy policy) {
  if (shells < 3) throw InvalidInput("density_shell_rank_correlation: need at least 3 shells");
  const std::vector<Matrix> xs = sample(p, n, seed, /*stream=*/0, policy);
  std::vector<double> dist(xs.size());
  parallel_for(policy, static_cast<std::int64_t>(xs.size()),
               [&](std::int64_t i) { dist[i] = p.backend->distance(xs[i], p.mean); });
  std::vector<double> sorted = dist;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - lo;
    return lo + 1 < sorted.size() ? sorted[lo] * (1 - frac) + sorted[lo + 1] * frac : sorted[lo];
  };
  // Quantile shells between the 2% and 98% distance quantiles.
  std::vector<double> edges(shells + 1);
  for (int k = 0; k <= shells; ++k) edges[k] = quantile(0.02 + 0.96 * k / shells);

  const int dof = p.backend->codomain_dof();
  std::vector<double> log_freq;
  std::vector<double> log_density;
  for (int k = 0; k < shells; ++k) {
    const double lo = edges[k];
    const double hi = edges[k + 1];
    if (!(hi > lo)) continue;
    long count = 0;
    for (double d : dist)
      if (d >= lo && d < hi) ++count;
    if (count == 0) continue;
    // Codomain shell volume is proportional to hi^dof - lo^dof.
    const double volume = std::pow(hi, dof) - std::pow(lo, dof);
    log_freq.push_back(std::log(static_cast<double>(count)) - std::log(volume));
    const double mid = 0.5 * (lo + hi);
    log_density.push_back(-mid * mid / (2.0 * p.sigma * p.sigma));
  }
  if (log_freq.size() < 3)
    throw InvalidInput("density_shell_rank_correlation: too few populated shells");
  return spearman(log_freq, log_density);
}

}  // namespace liebn
