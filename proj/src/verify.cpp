#include "liebn/verify.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "liebn/so_geometry.hpp"
#include "verify_internal.hpp"

namespace liebn {

namespace verify_detail {

Matrix TrialRng::rotation(int n, double norm) {
  Matrix v = skew(n, norm);
  if (norm == 0.0) v.setZero();
  return kern::rot_exp(v);
}

std::string mat_str(const Matrix& m) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) os << "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << " ";
      os << m(i, j);
    }
  }
  os << "]";
  return os.str();
}

std::string cell_name(const SpdMetric& m) {
  std::ostringstream os;
  os << family_name(m.family()) << " dim=" << m.dim() << " theta=" << m.theta() << " ab=("
     << m.alpha() << "," << m.beta() << ")";
  return os.str();
}

std::vector<SpdMetric> family_grid(SpdFamily family, int dim, bool ab_grid) {
  std::vector<SpdMetric> out;
  const double beta2 = 1.0 / (static_cast<double>(dim) * dim);
  switch (family) {
    case SpdFamily::LEM:
      out.emplace_back(SpdFamily::LEM, dim, 1.0, 1.0, 0.0);
      if (ab_grid) out.emplace_back(SpdFamily::LEM, dim, 1.0, 1.0, beta2);
      break;
    case SpdFamily::AIM:
      for (double theta : {-1.5, -0.5, 0.5, 1.0, 1.5}) {
        out.emplace_back(SpdFamily::AIM, dim, theta, 1.0, 0.0);
        if (ab_grid) out.emplace_back(SpdFamily::AIM, dim, theta, 1.0, beta2);
      }
      break;
    case SpdFamily::LCM:
      for (double theta : {-1.5, -0.5, 0.5, 1.0, 1.5})
        out.emplace_back(SpdFamily::LCM, dim, theta, 1.0, 0.0);
      break;
  }
  return out;
}

Matrix tangent_sample(const LieGroupBackend& backend, TrialRng& rng, double spread) {
  const int r = backend.rows();
  if (backend.cols() == 1) return spread * rng.gaussian(r, 1);
  const std::string d = backend.describe();
  if (d.rfind("so(", 0) == 0) return rng.skew(r, spread);
  if (d.rfind("spd-lcm", 0) == 0) return rng.lower_tri(r, spread);
  return rng.symmetric(r, spread);
}

std::vector<Matrix> random_batch(const LieGroupBackend& backend, TrialRng& rng, int count,
                                 double spread, bool around_random_base) {
  Matrix base = backend.neutral();
  if (around_random_base)
    base = backend.compose(base, backend.exp_at_neutral(tangent_sample(backend, rng, spread)));
  std::vector<Matrix> batch(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    batch[i] = backend.compose(base, backend.exp_at_neutral(tangent_sample(backend, rng, spread)));
  return batch;
}

}  // namespace verify_detail

using namespace verify_detail;

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> suites = {"geometry", "liebn", "gaussian", "rotation"};
  return suites;
}

const std::vector<std::string>& invariant_catalog() {
  static const std::vector<std::string> catalog = {
      // matrix kernels
      "mk.round_trips",
      "mk.pow_conjugation",
      "mk.vjp_fd",
      "mk.chol_reconstruct",
      // SPD families
      "spd.group_axioms",
      "spd.left_invariance",
      "spd.bi_invariance",
      "spd.deformation_lem",
      "spd.deformation_lcm_limit",
      "spd.frechet_first_order",
      "spd.mean_homogeneity",
      "spd.dispersion_scaling",
      "spd.lcm_pullback_distance",
      // rotations
      "so.exp_log_inverse",
      "so.left_invariance",
      "so.closed_form_vs_generic",
      "so.group_hooks",
      "so.geodesic_arclength",
      "so.retraction_order",
      "so.transport_isometry",
      "so.projection",
      "so.frechet",
      // normalization
      "bn.mean_control",
      "bn.variance_control",
      "bn.euclidean_reduction",
      "bn.pullback_equivalence",
      "bn.eval_purity",
      "bn.scaling_specialization",
      "bn.gamma_train",
      "bn.mliebn_equiv",
      "bn.dsm_partition",
      "bn.state_serialization",
      // Gaussian
      "gauss.mean_clt",
      "gauss.scaling",
      "gauss.homogeneity",
      "gauss.mle_probe",
      "gauss.seed_determinism",
      "gauss.density_shells",
      "gauss.concentration",
  };
  return catalog;
}

namespace {

TaskList build_tasks(const std::string& suite, const std::vector<int>& dims) {
  TaskList list;
  const bool all = suite == "all";
  // Suite-specific default grids; --dims overrides everywhere it applies.
  if (all || suite == "geometry") {
    add_kernel_tasks(list, dims.empty() ? std::vector<int>{2, 3, 5, 8} : dims);
    add_spd_tasks(list, dims.empty() ? std::vector<int>{2, 3, 4, 5, 6} : dims);
  }
  if (all || suite == "rotation")
    add_rotation_tasks(list, dims.empty() ? std::vector<int>{2, 3, 4, 5} : dims);
  if (all || suite == "liebn")
    add_liebn_tasks(list, dims.empty() ? std::vector<int>{2, 3, 5} : dims);
  if (all || suite == "gaussian")
    add_gaussian_tasks(list, dims.empty() ? std::vector<int>{2, 3} : dims);
  return list;
}

}  // namespace

std::vector<PropertyResult> run_verify(const std::string& suite, const VerifyOptions& options) {
  if (suite != "all" &&
      std::find(verify_suites().begin(), verify_suites().end(), suite) == verify_suites().end())
    throw InvalidInput("run_verify: unknown suite '" + suite + "'");
  const TaskList list = build_tasks(suite, options.dims);
  const auto& tasks = list.tasks();
  std::vector<PropertyResult> results(tasks.size());

  parallel_for(options.parallel_cells ? ExecPolicy::Parallel : ExecPolicy::Serial,
               static_cast<std::int64_t>(tasks.size()), [&](std::int64_t i) {
                 const Task& task = tasks[i];
                 PropertyResult r;
                 r.suite = task.suite;
                 r.property = task.property;
                 r.cell = task.cell;
                 r.trials = task.trials;
                 r.tolerance = task.tolerance;
                 if (task.property == options.corrupt_property)
                   r.tolerance = -1.0;  // forces failure; exercises the failure path
                 const auto t0 = std::chrono::steady_clock::now();
                 Check ck;
                 task.body(ck, options.seed, task.stream);
                 const auto t1 = std::chrono::steady_clock::now();
                 r.seconds = std::chrono::duration<double>(t1 - t0).count();
                 r.max_violation = ck.max();
                 r.pass = r.max_violation <= r.tolerance;
                 if (!r.pass) r.failing_case = ck.worst();
                 results[i] = std::move(r);
               });
  return results;
}

std::vector<std::string> missing_coverage() {
  const TaskList list = build_tasks("all", {});
  std::set<std::string> registered;
  for (const Task& t : list.tasks()) registered.insert(t.property);
  std::vector<std::string> missing;
  for (const std::string& id : invariant_catalog())
    if (!registered.count(id)) missing.push_back(id);
  return missing;
}

}  // namespace liebn
