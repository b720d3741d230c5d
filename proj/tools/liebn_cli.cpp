// Command-line front end: synthesize batches and run the normalization
// algorithms, drive the property-verification suites, draw Riemannian
// Gaussian samples, and benchmark the kernels. Reports are machine-readable
// (JSON or CSV); identical configuration and seed give identical reports
// except for wall-clock fields.
//
// Exit codes: 0 success, 1 property failure, 2 configuration error,
// 3 numeric error (the module error name is printed on stderr).

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "liebn/gaussian.hpp"
#include "liebn/liebn.hpp"
#include "liebn/matrix_io.hpp"
#include "liebn/philox.hpp"
#include "liebn/verify.hpp"

namespace {

using liebn::Matrix;
using ordered_json = nlohmann::ordered_json;

struct RunConfig {
  std::string family = "spd-lem";
  int dim = 3;
  double theta = 1.0;
  double alpha = 1.0;
  double beta = 0.0;
  std::string algo = "liebn";
  int batch_size = 16;
  int steps = 10;
  double scale = 1.0;
  double epsilon = 1e-5;
  double momentum = 0.1;
  int schedule_K = 4;
  int domains = 1;
  std::uint64_t seed = 42;
  double spread = 1.0;
  std::string out;
  std::string format = "json";
  std::string suite = "all";
  std::vector<int> dims;
  std::vector<double> bias_entries;  // config-file only, row-major
  std::string samples_out;
  std::string corrupt_property;  // test fixture
};

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["family"] = c.family;
  j["dim"] = c.dim;
  j["theta"] = c.theta;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["algo"] = c.algo;
  j["batch_size"] = c.batch_size;
  j["steps"] = c.steps;
  j["scale"] = c.scale;
  j["epsilon"] = c.epsilon;
  j["momentum"] = c.momentum;
  j["K"] = c.schedule_K;
  j["domains"] = c.domains;
  j["seed"] = c.seed;
  j["spread"] = c.spread;
  j["format"] = c.format;
  j["suite"] = c.suite;
  j["dims"] = c.dims;
  return j;
}

void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw liebn::InvalidInput("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw liebn::InvalidInput(std::string("config: ") + e.what());
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("family", c.family);
  get("dim", c.dim);
  get("theta", c.theta);
  get("alpha", c.alpha);
  get("beta", c.beta);
  get("algo", c.algo);
  get("batch_size", c.batch_size);
  get("steps", c.steps);
  get("scale", c.scale);
  get("epsilon", c.epsilon);
  get("momentum", c.momentum);
  get("K", c.schedule_K);
  get("domains", c.domains);
  get("seed", c.seed);
  get("spread", c.spread);
  get("out", c.out);
  get("format", c.format);
  get("suite", c.suite);
  get("dims", c.dims);
  get("bias", c.bias_entries);
  get("samples_out", c.samples_out);
}

liebn::BackendSpec backend_spec(const RunConfig& c) {
  liebn::BackendSpec spec;
  spec.family = c.family;
  spec.dim = c.dim;
  spec.theta = c.theta;
  spec.alpha = c.alpha;
  spec.beta = c.beta;
  return spec;
}

Matrix bias_matrix(const RunConfig& c, const liebn::LieGroupBackend& backend) {
  if (c.bias_entries.empty()) return backend.neutral();
  const int r = backend.rows();
  const int cols = backend.cols();
  if (static_cast<int>(c.bias_entries.size()) != r * cols)
    throw liebn::InvalidInput("config: bias entry count does not match the element shape");
  Matrix b(r, cols);
  int k = 0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < cols; ++j) b(i, j) = c.bias_entries[k++];
  backend.validate_element(b);
  return b;
}

// Synthetic batch for one step: Gaussian sampler where the backend supports
// it, otherwise exp_E of seeded tangent draws, both composed onto a per-run
// base point.
std::vector<Matrix> synthesize_batch(const liebn::BackendPtr& backend, const RunConfig& c,
                                     int step, const Matrix& base) {
  const bool so_like = c.family == "so";
  const double spread = so_like ? std::min(c.spread, 0.25) : c.spread;
  std::vector<Matrix> batch(static_cast<std::size_t>(c.batch_size));
  if (backend->supports_sampling()) {
    const liebn::GaussianParams p = liebn::make_gaussian(backend, base, spread);
    return liebn::sample(p, c.batch_size, c.seed, static_cast<std::uint32_t>(step + 1));
  }
  const liebn::NormalStream rng(c.seed, static_cast<std::uint32_t>(step + 1));
  const int rows = backend->rows();
  const int cols = backend->cols();
  for (int i = 0; i < c.batch_size; ++i) {
    Matrix t(rows, cols);
    std::uint32_t slot = 0;
    for (int a = 0; a < rows; ++a)
      for (int b = 0; b < cols; ++b) t(a, b) = rng.normal(i, slot++);
    if (cols > 1) {
      if (so_like)
        t = 0.5 * (t - t.transpose()).eval();
      else if (c.family == "spd-lcm")
        t = t.triangularView<Eigen::Lower>();
      else
        t = 0.5 * (t + t.transpose()).eval();
    }
    batch[i] = backend->compose(base, backend->exp_at_neutral(spread * t));
  }
  return batch;
}

void write_text(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw liebn::InvalidInput("cannot open output file " + out);
  f << text;
}

// ---------------------------------------------------------------------------
// normalize
// ---------------------------------------------------------------------------

int cmd_normalize(const RunConfig& c) {
  const liebn::BackendPtr backend = liebn::make_backend(backend_spec(c));
  if (c.steps < 1 || c.batch_size < 1)
    throw liebn::InvalidInput("normalize: steps and batch size must be positive");
  if (c.algo != "liebn" && c.algo != "mliebn" && c.algo != "dsmliebn")
    throw liebn::InvalidInput("normalize: unknown algo '" + c.algo + "'");
  if (c.algo == "dsmliebn" && c.domains < 1)
    throw liebn::InvalidInput("normalize: dsmliebn needs domains >= 1");

  const Matrix bias = bias_matrix(c, *backend);
  // Per-run base point the batches are centered on.
  const liebn::NormalStream base_rng(c.seed, 0);
  Matrix base_t(backend->rows(), backend->cols());
  {
    std::uint32_t slot = 0;
    for (int i = 0; i < backend->rows(); ++i)
      for (int j = 0; j < backend->cols(); ++j) base_t(i, j) = 0.4 * base_rng.normal(0, slot++);
    if (backend->cols() > 1) {
      if (c.family == "so")
        base_t = 0.5 * (base_t - base_t.transpose()).eval();
      else if (c.family == "spd-lcm")
        base_t = base_t.triangularView<Eigen::Lower>();
      else
        base_t = 0.5 * (base_t + base_t.transpose()).eval();
    }
  }
  const Matrix base = backend->exp_at_neutral(base_t);

  liebn::LieBNState liebn_state = liebn::make_liebn_state(backend, bias, c.scale, c.epsilon,
                                                          c.momentum, backend_spec(c));
  liebn::MLieBNState mliebn_state =
      c.algo != "liebn"
          ? liebn::make_mliebn_state(backend, bias, c.scale, c.epsilon, c.momentum, c.schedule_K,
                                     1.0 / std::max(1, c.domains), backend_spec(c))
          : liebn::MLieBNState{};
  liebn::DsmLieBNBank bank;
  if (c.algo == "dsmliebn") {
    std::vector<int> ids(static_cast<std::size_t>(c.domains));
    std::iota(ids.begin(), ids.end(), 0);
    bank = liebn::make_dsm_bank(backend, ids, c.scale, c.epsilon, c.momentum, c.schedule_K,
                                1.0 / c.domains);
  }
  // dsmliebn biases every domain toward E; report distances to that target.
  const Matrix target = c.algo == "dsmliebn" ? backend->neutral() : bias;

  ordered_json steps_json = ordered_json::array();
  for (int step = 0; step < c.steps; ++step) {
    const std::vector<Matrix> batch = synthesize_batch(backend, c, step, base);
    const Matrix pre_mean = backend->frechet_mean(batch, {}, liebn::ExecPolicy::Parallel);
    const double pre_var =
        backend->frechet_variance(batch, pre_mean, {}, liebn::ExecPolicy::Parallel);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Matrix> out;
    if (c.algo == "liebn") {
      out = liebn::liebn_forward(liebn_state, batch);
    } else if (c.algo == "mliebn") {
      out = liebn::mliebn_forward(mliebn_state, batch);
    } else {
      std::vector<int> ids(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) ids[i] = static_cast<int>(i) % c.domains;
      out = liebn::dsm_liebn_forward(bank, batch, ids);
    }
    const auto t1 = std::chrono::steady_clock::now();

    const Matrix post_mean = backend->frechet_mean(out, {}, liebn::ExecPolicy::Parallel);
    const double post_var =
        backend->frechet_variance(out, post_mean, {}, liebn::ExecPolicy::Parallel);

    ordered_json rec;
    rec["step"] = step;
    rec["pre_mean_dist"] = backend->distance(pre_mean, target);
    rec["post_mean_dist"] = backend->distance(post_mean, target);
    rec["pre_var"] = pre_var;
    rec["post_var"] = post_var;
    if (c.algo == "liebn") {
      rec["running_var"] = liebn_state.running_var;
    } else if (c.algo == "mliebn") {
      rec["train_running_var"] = mliebn_state.train_var;
      rec["eval_running_var"] = mliebn_state.eval_var;
    } else {
      ordered_json per_domain = ordered_json::array();
      for (const auto& [id, st] : bank.states) {
        ordered_json d;
        d["domain"] = id;
        d["train_running_var"] = st.train_var;
        d["eval_running_var"] = st.eval_var;
        per_domain.push_back(d);
      }
      rec["domains"] = per_domain;
    }
    rec["wall_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    steps_json.push_back(rec);
  }

  if (c.format == "csv") {
    std::ostringstream csv;
    csv << "step,pre_mean_dist,post_mean_dist,pre_var,post_var,wall_ms\n";
    csv.precision(17);
    for (const auto& rec : steps_json)
      csv << rec["step"] << ',' << static_cast<double>(rec["pre_mean_dist"]) << ','
          << static_cast<double>(rec["post_mean_dist"]) << ','
          << static_cast<double>(rec["pre_var"]) << ',' << static_cast<double>(rec["post_var"])
          << ',' << static_cast<double>(rec["wall_ms"]) << '\n';
    write_text(c.out, csv.str());
    return 0;
  }

  ordered_json report;
  report["schema_version"] = "1";
  report["command"] = "normalize";
  report["config"] = config_json(c);
  report["steps"] = steps_json;
  if (c.algo == "liebn") {
    report["final_state"] = nlohmann::ordered_json::parse(liebn::state_to_json(liebn_state));
  }
  write_text(c.out, report.dump(2));
  return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int cmd_verify(const RunConfig& c) {
  const std::vector<std::string> missing = liebn::missing_coverage();
  if (!missing.empty()) {
    std::ostringstream os;
    os << "verify: invariant catalog not fully covered:";
    for (const auto& id : missing) os << ' ' << id;
    throw liebn::Error(os.str());
  }
  liebn::VerifyOptions opts;
  opts.dims = c.dims;
  opts.seed = c.seed;
  opts.corrupt_property = c.corrupt_property;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<liebn::PropertyResult> results = liebn::run_verify(c.suite, opts);
  const auto t1 = std::chrono::steady_clock::now();

  bool all_pass = true;
  ordered_json props = ordered_json::array();
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    ordered_json p;
    p["suite"] = r.suite;
    p["property"] = r.property;
    p["cell"] = r.cell;
    p["trials"] = r.trials;
    p["max_violation"] = r.max_violation;
    p["tolerance"] = r.tolerance;
    p["pass"] = r.pass;
    if (!r.pass) p["failing_case"] = r.failing_case;
    p["seconds"] = r.seconds;
    props.push_back(p);
  }

  if (c.format == "csv") {
    std::ostringstream csv;
    csv << "suite,property,cell,trials,max_violation,tolerance,pass\n";
    csv.precision(17);
    for (const auto& r : results)
      csv << r.suite << ',' << r.property << ',' << '"' << r.cell << '"' << ',' << r.trials << ','
          << r.max_violation << ',' << r.tolerance << ',' << (r.pass ? "true" : "false") << '\n';
    write_text(c.out, csv.str());
  } else {
    ordered_json report;
    report["schema_version"] = "1";
    report["command"] = "verify";
    report["config"] = config_json(c);
    report["properties"] = props;
    report["all_pass"] = all_pass;
    report["total_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    write_text(c.out, report.dump(2));
  }

  if (!all_pass) {
    for (const auto& r : results)
      if (!r.pass)
        std::cerr << "FAIL " << r.property << " [" << r.cell << "] max_violation=" << r.max_violation
                  << " tolerance=" << r.tolerance << " failing_case=" << r.failing_case << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

int cmd_sample(const RunConfig& c) {
  const liebn::BackendPtr backend = liebn::make_backend(backend_spec(c));
  if (c.batch_size < 1) throw liebn::InvalidInput("sample: batch size must be positive");
  const liebn::GaussianParams p = liebn::make_gaussian(backend, backend->neutral(), c.spread);
  const std::vector<Matrix> xs = liebn::sample(p, c.batch_size, c.seed);
  const liebn::SampleReport rep = liebn::summarize_samples(p, xs, c.seed);
  if (!c.samples_out.empty()) liebn::write_matrices_file(c.samples_out, xs);

  ordered_json sj;
  sj["n_samples"] = rep.n_samples;
  sj["seed"] = rep.seed;
  sj["sigma"] = c.spread;
  sj["empirical_variance"] = rep.empirical_variance;
  sj["analytic_variance"] = rep.analytic_variance;
  sj["mean_dist_to_target"] = rep.mean_dist_to_target;
  sj["mc_standard_error"] = rep.mc_standard_error;
  {
    ordered_json entries = ordered_json::array();
    for (Eigen::Index i = 0; i < rep.empirical_mean.rows(); ++i)
      for (Eigen::Index j = 0; j < rep.empirical_mean.cols(); ++j)
        entries.push_back(rep.empirical_mean(i, j));
    sj["empirical_mean"] = entries;
  }
  if (c.scale != 1.0) {
    const liebn::ScalingReport sc = liebn::verify_scaling_law(p, c.scale, c.batch_size, c.seed);
    ordered_json scj;
    scj["s"] = c.scale;
    scj["variance_ratio"] = sc.variance_ratio;
    scj["dispersion_about_e_ratio"] = sc.dispersion_about_e_ratio;
    scj["min_ks_pvalue"] = sc.min_ks_pvalue;
    scj["bonferroni_level"] = sc.bonferroni_level;
    scj["pass"] = sc.pass;
    sj["scaling_check"] = scj;
  }

  if (c.format == "csv") {
    std::ostringstream csv;
    csv.precision(17);
    csv << "key,value\n";
    csv << "n_samples," << rep.n_samples << "\n";
    csv << "seed," << rep.seed << "\n";
    csv << "sigma," << c.spread << "\n";
    csv << "empirical_variance," << rep.empirical_variance << "\n";
    csv << "analytic_variance," << rep.analytic_variance << "\n";
    csv << "mean_dist_to_target," << rep.mean_dist_to_target << "\n";
    csv << "mc_standard_error," << rep.mc_standard_error << "\n";
    write_text(c.out, csv.str());
    return 0;
  }

  ordered_json report;
  report["schema_version"] = "1";
  report["command"] = "sample";
  report["config"] = config_json(c);
  report["sample_report"] = sj;
  write_text(c.out, report.dump(2));
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int cmd_bench(const RunConfig& c) {
  std::vector<std::string> families;
  if (c.family == "all")
    families = {"spd-aim", "spd-lem", "spd-lcm", "so", "euclidean"};
  else
    families = {c.family};
  std::vector<int> dims = c.dims.empty() ? std::vector<int>{c.dim} : c.dims;
  const int reps = std::max(30, c.steps);

  struct Row {
    std::string family;
    int dim;
    std::string exec;
    double median_ms;
    double p95_ms;
  };
  std::vector<Row> rows;
  for (const std::string& family : families) {
    for (int dim : dims) {
      RunConfig cell = c;
      cell.family = family;
      cell.dim = dim;
      const liebn::BackendPtr backend = liebn::make_backend(backend_spec(cell));
      const Matrix base = backend->neutral();
      const std::vector<Matrix> batch = synthesize_batch(backend, cell, 0, base);
      for (liebn::ExecPolicy policy : {liebn::ExecPolicy::Serial, liebn::ExecPolicy::Parallel}) {
        liebn::LieBNState st = liebn::make_liebn_state(backend, backend->neutral(), cell.scale,
                                                       cell.epsilon, cell.momentum);
        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(reps));
        for (int r = 0; r < reps; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          liebn::liebn_forward(st, batch, policy);
          const auto t1 = std::chrono::steady_clock::now();
          times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        std::sort(times.begin(), times.end());
        const double median = times[times.size() / 2];
        const double p95 = times[static_cast<std::size_t>(0.95 * (times.size() - 1))];
        rows.push_back(
            {family, dim, policy == liebn::ExecPolicy::Serial ? "serial" : "parallel", median,
             p95});
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.median_ms < b.median_ms; });

  if (c.format == "csv") {
    std::ostringstream csv;
    csv.precision(6);
    csv << "family,dim,exec,reps,median_ms,p95_ms\n";
    for (const Row& r : rows)
      csv << r.family << ',' << r.dim << ',' << r.exec << ',' << reps << ',' << r.median_ms << ','
          << r.p95_ms << '\n';
    write_text(c.out, csv.str());
    return 0;
  }

  ordered_json cells = ordered_json::array();
  for (const Row& r : rows) {
    ordered_json j;
    j["family"] = r.family;
    j["dim"] = r.dim;
    j["exec"] = r.exec;
    j["reps"] = reps;
    j["median_ms"] = r.median_ms;
    j["p95_ms"] = r.p95_ms;
    cells.push_back(j);
  }
  ordered_json report;
  report["schema_version"] = "1";
  report["command"] = "bench";
  report["config"] = config_json(c);
  report["cells"] = cells;
  write_text(c.out, report.dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lie-group batch normalization toolkit"};
  app.require_subcommand(1);

  RunConfig c;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--family", c.family,
                    "backend family: spd-aim | spd-lem | spd-lcm | so | euclidean");
    sub->add_option("--dim", c.dim, "matrix dimension");
    sub->add_option("--theta", c.theta, "deformation factor");
    sub->add_option("--alpha", c.alpha, "inner-product alpha");
    sub->add_option("--beta", c.beta, "inner-product beta");
    sub->add_option("--algo", c.algo, "liebn | mliebn | dsmliebn");
    sub->add_option("--batch-size", c.batch_size, "elements per batch (samples for `sample`)");
    sub->add_option("--steps", c.steps, "forward steps (repetitions for `bench`)");
    sub->add_option("--scale", c.scale, "scaling parameter s");
    sub->add_option("--epsilon", c.epsilon, "variance epsilon");
    sub->add_option("--momentum", c.momentum, "running-statistics momentum");
    sub->add_option("--K", c.schedule_K, "momentum schedule horizon K");
    sub->add_option("--domains", c.domains, "domains per batch (dsmliebn)");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--spread", c.spread, "codomain standard deviation of synthetic batches");
    sub->add_option("--out", c.out, "output path (stdout when omitted)");
    sub->add_option("--format", c.format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--config", config_path, "JSON config file overriding flags");
  };

  CLI::App* normalize = app.add_subcommand("normalize", "synthesize batches and normalize them");
  add_common(normalize);
  CLI::App* verify = app.add_subcommand("verify", "run property-verification suites");
  add_common(verify);
  verify->add_option("--suite", c.suite, "geometry | liebn | gaussian | rotation | all")
      ->check(CLI::IsMember({"geometry", "liebn", "gaussian", "rotation", "all"}));
  verify->add_option("--dims", c.dims, "dimensions to run (defaults per suite)");
  verify->add_option("--corrupt-tolerance", c.corrupt_property,
                     "test fixture: force the named property to fail")
      ->group("");
  CLI::App* sampler = app.add_subcommand("sample", "draw Riemannian Gaussian samples");
  add_common(sampler);
  sampler->add_option("--samples-out", c.samples_out, "write samples as a matrix text file");
  CLI::App* bench = app.add_subcommand("bench", "time forward passes per (family, dim) cell");
  add_common(bench);
  bench->add_option("--dims", c.dims, "dimensions to benchmark");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_path.empty()) apply_config_file(c, config_path);
    if (normalize->parsed()) return cmd_normalize(c);
    if (verify->parsed()) return cmd_verify(c);
    if (sampler->parsed()) return cmd_sample(c);
    if (bench->parsed()) return cmd_bench(c);
    return 2;
  } catch (const liebn::InvalidMetric& e) {
    std::cerr << "InvalidMetric: " << e.what() << "\n";
    return 2;
  } catch (const liebn::InvalidInput& e) {
    std::cerr << "InvalidInput: " << e.what() << "\n";
    return 2;
  } catch (const liebn::UnsupportedBackend& e) {
    std::cerr << "UnsupportedBackend: " << e.what() << "\n";
    return 2;
  } catch (const liebn::Error& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
