#include "liebn/gaussian.hpp"
#include "verify_internal.hpp"

namespace liebn::verify_detail {

namespace {

std::vector<std::pair<std::string, BackendSpec>> sampling_cells(const std::vector<int>& dims) {
  std::vector<std::pair<std::string, BackendSpec>> cells;
  for (int dim : dims) {
    if (dim > 4) continue;
    cells.push_back({"spd-lem dim=" + std::to_string(dim), {"spd-lem", dim, 1.0, 1.0, 0.0}});
    cells.push_back({"spd-lcm dim=" + std::to_string(dim), {"spd-lcm", dim, 1.0, 1.0, 0.0}});
  }
  cells.push_back({"spd-lcm theta=0.5 dim=2", {"spd-lcm", 2, 0.5, 1.0, 0.0}});
  cells.push_back({"euclidean dim=3", {"euclidean", 3, 1.0, 1.0, 0.0}});
  return cells;
}

}  // namespace

void add_gaussian_tasks(TaskList& list, const std::vector<int>& dims) {
  const int n = 20000;

  for (const auto& [label, spec] : sampling_cells(dims)) {
    list.add("gaussian", "gauss.mean_clt", label, n, 0.0,
             [spec](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               const BackendPtr backend = make_backend(spec);
               TrialRng rng(seed, stream, 0);
               const Matrix m0 =
                   backend->exp_at_neutral(tangent_sample(*backend, rng, 0.5));
               const GaussianParams p = make_gaussian(backend, m0, 1.0);
               const std::vector<Matrix> xs =
                   sample(p, 20000, seed + stream, 0, ExecPolicy::Serial);
               const SampleReport rep = summarize_samples(p, xs, seed, ExecPolicy::Serial);
               auto describe = [&] {
                 return "M=" + mat_str(m0) + " dist=" + std::to_string(rep.mean_dist_to_target) +
                        " 3se=" + std::to_string(3.0 * rep.mc_standard_error);
               };
               ck.observe(std::max(0.0, rep.mean_dist_to_target - 3.0 * rep.mc_standard_error),
                          describe);
               // empirical Frechet variance within 5% of dof * sigma^2
               ck.observe(std::max(0.0, std::abs(rep.empirical_variance / rep.analytic_variance -
                                                 1.0) -
                                            0.05),
                          describe);
             });

    for (double s : {0.5, 2.0}) {
      list.add("gaussian", "gauss.scaling", label + " s=" + std::to_string(s), n, 0.0,
               [spec, s](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                 const BackendPtr backend = make_backend(spec);
                 const GaussianParams p = make_gaussian(backend, backend->neutral(), 0.8);
                 const ScalingReport rep =
                     verify_scaling_law(p, s, 20000, seed + stream, 0.01, ExecPolicy::Serial);
                 auto describe = [&] {
                   return "s=" + std::to_string(s) +
                          " ratio=" + std::to_string(rep.variance_ratio) +
                          " ks_p=" + std::to_string(rep.min_ks_pvalue);
                 };
                 ck.observe(std::max(0.0, std::abs(rep.variance_ratio / (s * s) - 1.0) - 0.05),
                            describe);
                 ck.observe(std::max(0.0, rep.bonferroni_level - rep.min_ks_pvalue), describe);
                 // the dispersion-about-E identity is exact up to roundoff
                 ck.observe(std::abs(rep.dispersion_about_e_ratio / (s * s) - 1.0) > 1e-9 ? 1.0
                                                                                          : 0.0,
                            describe);
               });
    }
  }

  // sign flip: phi_{-1} preserves the law entirely
  list.add("gaussian", "gauss.scaling", "spd-lem dim=2 s=-1", n, 0.0,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             const BackendSpec spec{"spd-lem", 2, 1.0, 1.0, 0.0};
             const BackendPtr backend = make_backend(spec);
             const GaussianParams p = make_gaussian(backend, backend->neutral(), 0.8);
             const ScalingReport rep =
                 verify_scaling_law(p, -1.0, 20000, seed + stream, 0.01, ExecPolicy::Serial);
             auto describe = [&] { return "ratio=" + std::to_string(rep.variance_ratio); };
             ck.observe(std::max(0.0, std::abs(rep.variance_ratio - 1.0) - 0.05), describe);
             ck.observe(std::max(0.0, rep.bonferroni_level - rep.min_ks_pvalue), describe);
           });

  for (const auto& [label, spec] : sampling_cells(dims)) {
    list.add("gaussian", "gauss.homogeneity", label, n, 0.0,
             [spec](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               const BackendPtr backend = make_backend(spec);
               TrialRng rng(seed, stream, 0);
               const Matrix m0 = backend->exp_at_neutral(tangent_sample(*backend, rng, 0.4));
               const Matrix b = backend->exp_at_neutral(tangent_sample(*backend, rng, 0.7));
               const GaussianParams p = make_gaussian(backend, m0, 0.9);
               const HomogeneityReport rep =
                   verify_homogeneity(p, b, 20000, seed + stream, ExecPolicy::Serial);
               auto describe = [&] {
                 return "B=" + mat_str(b) + " shift=" + std::to_string(rep.mean_shift) +
                        " vr=" + std::to_string(rep.variance_ratio);
               };
               ck.observe(std::max(0.0, rep.mean_shift - 3.0 * rep.translated.mc_standard_error),
                          describe);
               ck.observe(std::max(0.0, std::abs(rep.variance_ratio - 1.0) - 0.05), describe);
             });
  }

  // Sample Frechet mean beats nearby perturbations (first-order optimality).
  for (const auto& [label, spec] : sampling_cells(dims)) {
    if (spec.family == "euclidean") continue;
    list.add("gaussian", "gauss.mle_probe", label, 50, 0.0,
             [spec](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               const BackendPtr backend = make_backend(spec);
               TrialRng rng(seed, stream, 0);
               const Matrix m0 = backend->exp_at_neutral(tangent_sample(*backend, rng, 0.4));
               const GaussianParams p = make_gaussian(backend, m0, 0.7);
               const std::vector<Matrix> xs = sample(p, 64, seed + stream, 0, ExecPolicy::Serial);
               const Matrix mean = backend->frechet_mean(xs, {}, ExecPolicy::Serial);
               auto sum_sq = [&](const Matrix& c) {
                 double acc = 0.0;
                 for (const Matrix& x : xs) {
                   const double d = backend->distance(x, c);
                   acc += d * d;
                 }
                 return acc;
               };
               const double at_mean = sum_sq(mean);
               const Vector center = backend->to_codomain_coords(mean);
               const int dof = backend->codomain_dof();
               for (int j = 0; j < 50; ++j) {
                 Vector dir(dof);
                 for (int k = 0; k < dof; ++k) dir(k) = rng.normal();
                 dir *= 0.05 / dir.norm();
                 const Matrix perturbed = backend->from_codomain_coords(center + dir);
                 const double at_pert = sum_sq(perturbed);
                 ck.observe(std::max(0.0, at_mean - at_pert + 1e-12),
                            [&] { return "perturbation " + std::to_string(j); });
               }
             });
  }

  list.add("gaussian", "gauss.seed_determinism", "spd-lem dim=3", 2000, 0.0,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             const BackendSpec spec{"spd-lem", 3, 1.0, 1.0, 0.0};
             const BackendPtr backend = make_backend(spec);
             const GaussianParams p = make_gaussian(backend, backend->neutral(), 1.0);
             const std::vector<Matrix> a = sample(p, 2000, seed + stream, 0, ExecPolicy::Serial);
             const std::vector<Matrix> b = sample(p, 2000, seed + stream, 0, ExecPolicy::Parallel);
             auto describe = [] { return std::string("same seed, serial vs parallel"); };
             double max_diff = 0.0;
             for (std::size_t i = 0; i < a.size(); ++i)
               max_diff = std::max(max_diff, (a[i] - b[i]).cwiseAbs().maxCoeff());
             ck.observe(max_diff, describe);
             // a different stream must decouple
             const std::vector<Matrix> c = sample(p, 2000, seed + stream, 7, ExecPolicy::Serial);
             double min_diff = 1e300;
             for (std::size_t i = 0; i < a.size(); ++i)
               min_diff = std::min(min_diff, (a[i] - c[i]).cwiseAbs().maxCoeff());
             ck.observe(min_diff > 0.0 ? 0.0 : 1.0, describe);
           });

  list.add("gaussian", "gauss.density_shells", "spd-lem dim=2 n=50000", 50000, 0.0,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             const BackendSpec spec{"spd-lem", 2, 1.0, 1.0, 0.0};
             const BackendPtr backend = make_backend(spec);
             TrialRng rng(seed, stream, 0);
             const Matrix m0 = backend->exp_at_neutral(tangent_sample(*backend, rng, 0.3));
             const GaussianParams p = make_gaussian(backend, m0, 1.0);
             const double corr =
                 density_shell_rank_correlation(p, 50000, seed + stream, 25, ExecPolicy::Serial);
             ck.observe(std::max(0.0, 0.95 - corr),
                        [&] { return "rank correlation " + std::to_string(corr); });
           });

  list.add("gaussian", "gauss.concentration", "spd-lcm dim=3 sigma=1e-8", 200, 0.0,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             const BackendSpec spec{"spd-lcm", 3, 1.0, 1.0, 0.0};
             const BackendPtr backend = make_backend(spec);
             TrialRng rng(seed, stream, 0);
             const Matrix m0 = backend->exp_at_neutral(tangent_sample(*backend, rng, 0.5));
             const GaussianParams p = make_gaussian(backend, m0, 1e-8);
             const std::vector<Matrix> xs = sample(p, 200, seed + stream, 0, ExecPolicy::Serial);
             for (const Matrix& x : xs)
               ck.observe(std::max(0.0, backend->distance(x, m0) - 1e-6),
                          [&] { return "M=" + mat_str(m0); });
           });
}

}  // namespace liebn::verify_detail
