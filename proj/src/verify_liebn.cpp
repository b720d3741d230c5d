#include "liebn/liebn.hpp"
#include "verify_internal.hpp"

namespace liebn::verify_detail {

namespace {

// Backends exercised by the normalization suite.
struct BnCell {
  std::string label;
  BackendSpec spec;
  double spread;     // batch tangent spread
  double mean_tol;   // mean-control tolerance
  std::vector<double> scales;
};

std::vector<BnCell> bn_cells(int dim) {
  const double beta2 = 1.0 / (static_cast<double>(dim) * dim);
  std::vector<BnCell> cells;
  cells.push_back({"spd-lem", {"spd-lem", dim, 1.0, 1.0, 0.0}, 0.7, 1e-7, {0.5, 1.0, 2.0, -1.0}});
  cells.push_back(
      {"spd-lem ab", {"spd-lem", dim, 1.0, 1.0, beta2}, 0.7, 1e-7, {0.5, 1.0, 2.0, -1.0}});
  cells.push_back({"spd-lcm", {"spd-lcm", dim, 1.0, 1.0, 0.0}, 0.7, 1e-7, {0.5, 1.0, 2.0, -1.0}});
  cells.push_back(
      {"spd-lcm theta=0.5", {"spd-lcm", dim, 0.5, 1.0, 0.0}, 0.7, 1e-7, {0.5, 1.0, 2.0, -1.0}});
  cells.push_back({"spd-aim", {"spd-aim", dim, 1.0, 1.0, 0.0}, 0.7, 1e-6, {0.5, 1.0, 2.0, -1.0}});
  cells.push_back(
      {"spd-aim theta=1.5", {"spd-aim", dim, 1.5, 1.0, 0.0}, 0.7, 1e-6, {0.5, 1.0, 2.0, -1.0}});
  cells.push_back({"euclidean", {"euclidean", dim, 1.0, 1.0, 0.0}, 1.0, 1e-7, {0.5, 1.0, 2.0, -1.0}});
  // Rotations stay well inside the injectivity radius: small spread and small
  // scales keep the scaled batch inside the pi/2 Karcher ball.
  cells.push_back({"so", {"so", std::max(dim, 2), 1.0, 1.0, 0.0}, 0.2, 1e-7, {0.25, 0.5, 1.0, -0.5}});
  return cells;
}

Matrix random_bias(const LieGroupBackend& backend, TrialRng& rng) {
  return backend.exp_at_neutral(tangent_sample(backend, rng,
                                               backend.describe().rfind("so(", 0) == 0 ? 0.3 : 0.6));
}

}  // namespace

void add_liebn_tasks(TaskList& list, const std::vector<int>& dims) {
  for (int dim : dims) {
    for (const BnCell& cell : bn_cells(dim)) {
      list.add("liebn", "bn.mean_control", cell.label + " dim=" + std::to_string(dim), 50,
               cell.mean_tol, [cell](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                 const BackendPtr backend = make_backend(cell.spec);
                 const bool is_so = cell.spec.family == "so";
                 for (long t = 0; t < 50; ++t) {
                   TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                   const std::vector<Matrix> batch = random_batch(*backend, rng, 16, cell.spread);
                   const Matrix b = random_bias(*backend, rng);
                   const double s = is_so ? 0.4 : (t % 2 == 0 ? 0.5 : 2.0);
                   LieBNState st = make_liebn_state(backend, b, s, 1e-5, 0.1);
                   const std::vector<Matrix> out = liebn_forward(st, batch, ExecPolicy::Serial);
                   const Matrix mean = backend->frechet_mean(out, {}, ExecPolicy::Serial);
                   ck.observe(backend->distance(mean, b),
                              [&] { return "B=" + mat_str(b) + " s=" + std::to_string(s); });
                 }
               });

      list.add("liebn", "bn.variance_control", cell.label + " dim=" + std::to_string(dim), 50,
               1e-7, [cell](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                 const BackendPtr backend = make_backend(cell.spec);
                 const Matrix e = backend->neutral();
                 const double eps = 1e-5;
                 for (long t = 0; t < 50; ++t) {
                   TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                   const std::vector<Matrix> batch = random_batch(*backend, rng, 16, cell.spread);
                   LieBNState st = make_liebn_state(backend, e, 1.0, eps, 0.1);
                   const GroupBatchStats stats = batch_statistics(st, batch, ExecPolicy::Serial);
                   for (double s : cell.scales) {
                     st.scale = s;
                     const std::vector<Matrix> out =
                         normalize_batch(st, batch, stats, ExecPolicy::Serial);
                     double disp = 0.0;
                     for (const Matrix& p : out) {
                       const double d = backend->distance(p, e);
                       disp += d * d;
                     }
                     disp /= static_cast<double>(out.size());
                     const double want = s * s * stats.variance / (stats.variance + eps);
                     ck.observe(std::abs(disp - want) / std::max(1e-12, want),
                                [&] { return "s=" + std::to_string(s); });
                   }
                 }
               });
    }
  }

  // Dual-path equivalence through the pullback map.
  for (int dim : dims) {
    struct PullCell {
      std::string label;
      BackendSpec spec;
      double tol;
    };
    const double beta2 = 1.0 / (static_cast<double>(dim) * dim);
    std::vector<PullCell> cells;
    cells.push_back({"spd-lem", {"spd-lem", dim, 1.0, 1.0, 0.0}, 1e-9});
    cells.push_back({"spd-lem ab", {"spd-lem", dim, 1.0, 1.0, beta2}, 1e-9});
    for (double theta : {0.5, 1.0, 1.5})
      cells.push_back({"spd-lcm theta=" + std::to_string(theta),
                       {"spd-lcm", dim, theta, 1.0, 0.0},
                       1e-9});
    for (double theta : {0.5, 1.0, 1.5}) {
      cells.push_back({"spd-aim theta=" + std::to_string(theta),
                       {"spd-aim", dim, theta, 1.0, 0.0},
                       1e-7});
      cells.push_back({"spd-aim ab theta=" + std::to_string(theta),
                       {"spd-aim", dim, theta, 1.0, beta2},
                       1e-7});
    }
    for (const PullCell& cell : cells) {
      list.add("liebn", "bn.pullback_equivalence", cell.label + " dim=" + std::to_string(dim), 50,
               cell.tol, [cell](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                 const BackendPtr backend = make_backend(cell.spec);
                 for (long t = 0; t < 50; ++t) {
                   TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                   const std::vector<Matrix> batch = random_batch(*backend, rng, 8, 0.6);
                   const Matrix b = random_bias(*backend, rng);
                   LieBNState direct = make_liebn_state(backend, b, 1.7, 1e-5, 0.3);
                   direct.running_mean =
                       backend->exp_at_neutral(tangent_sample(*backend, rng, 0.4));
                   direct.running_var = 1.8;
                   LieBNState viaf = direct;
                   const std::vector<Matrix> out_a = liebn_forward(direct, batch, ExecPolicy::Serial);
                   const std::vector<Matrix> out_b =
                       liebn_forward_pullback(viaf, batch, ExecPolicy::Serial);
                   auto describe = [&] { return "B=" + mat_str(b); };
                   for (std::size_t i = 0; i < out_a.size(); ++i)
                     ck.observe(rel(out_b[i], out_a[i]), describe);
                   ck.observe(rel(viaf.running_mean, direct.running_mean), describe);
                   ck.observe(std::abs(viaf.running_var - direct.running_var) /
                                  std::max(1.0, direct.running_var),
                              describe);
                 }
               });
    }
  }

  // Textbook per-feature batch normalization, coded directly from the classic
  // formulas, against the Euclidean backend.
  list.add("liebn", "bn.euclidean_reduction", "3 features, 100 train + 20 eval steps", 120, 1e-12,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             const int features = 3;
             const int batch_size = 8;
             const double eps = 1e-5;
             const double momentum = 0.1;
             const double scale[3] = {1.3, -0.7, 2.1};
             const double bias[3] = {0.4, 0.0, -1.2};
             const BackendPtr backend = make_euclidean_backend(1);

             std::vector<LieBNState> states;
             for (int f = 0; f < features; ++f) {
               Matrix b(1, 1);
               b(0, 0) = bias[f];
               states.push_back(make_liebn_state(backend, b, scale[f], eps, momentum));
             }
             // Textbook running statistics.
             double r_mean[3] = {0.0, 0.0, 0.0};
             double r_var[3] = {1.0, 1.0, 1.0};

             long trial = 0;
             for (int step = 0; step < 120; ++step, ++trial) {
               TrialRng rng(seed, stream, static_cast<std::uint64_t>(trial));
               const bool train = step < 100;
               double x[8][3];
               for (int i = 0; i < batch_size; ++i)
                 for (int f = 0; f < features; ++f) x[i][f] = 2.0 * rng.normal() + 0.5;

               for (int f = 0; f < features; ++f) {
                 // reference path
                 double y_ref[8];
                 if (train) {
                   double mu = 0.0;
                   for (int i = 0; i < batch_size; ++i) mu += x[i][f];
                   mu /= batch_size;
                   double var = 0.0;
                   for (int i = 0; i < batch_size; ++i) var += (x[i][f] - mu) * (x[i][f] - mu);
                   var /= batch_size;
                   for (int i = 0; i < batch_size; ++i)
                     y_ref[i] = scale[f] * (x[i][f] - mu) / std::sqrt(var + eps) + bias[f];
                   r_mean[f] = (1.0 - momentum) * r_mean[f] + momentum * mu;
                   r_var[f] = (1.0 - momentum) * r_var[f] + momentum * var;
                 } else {
                   for (int i = 0; i < batch_size; ++i)
                     y_ref[i] =
                         scale[f] * (x[i][f] - r_mean[f]) / std::sqrt(r_var[f] + eps) + bias[f];
                 }

                 // library path
                 states[f].mode = train ? Mode::Train : Mode::Eval;
                 std::vector<Matrix> batch(batch_size, Matrix(1, 1));
                 for (int i = 0; i < batch_size; ++i) batch[i](0, 0) = x[i][f];
                 const std::vector<Matrix> y = liebn_forward(states[f], batch, ExecPolicy::Serial);

                 auto describe = [&] {
                   return "step=" + std::to_string(step) + " feature=" + std::to_string(f);
                 };
                 for (int i = 0; i < batch_size; ++i)
                   ck.observe(std::abs(y[i](0, 0) - y_ref[i]), describe);
                 ck.observe(std::abs(states[f].running_mean(0, 0) - r_mean[f]), describe);
                 ck.observe(std::abs(states[f].running_var - r_var[f]), describe);
               }
             }
           });

  // Eval mode never mutates state and is bitwise repeatable.
  for (const char* family : {"euclidean", "spd-lem"}) {
    list.add("liebn", "bn.eval_purity", family, 10, 0.0,
             [family](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               BackendSpec spec;
               spec.family = family;
               spec.dim = 3;
               const BackendPtr backend = make_backend(spec);
               for (long t = 0; t < 10; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 LieBNState st = make_liebn_state(backend, random_bias(*backend, rng), 1.5, 1e-5, 0.2);
                 const std::vector<Matrix> train_batch = random_batch(*backend, rng, 8, 0.7);
                 liebn_forward(st, train_batch, ExecPolicy::Serial);
                 st.mode = Mode::Eval;
                 const Matrix rm = st.running_mean;
                 const double rv = st.running_var;
                 const std::vector<Matrix> probe = random_batch(*backend, rng, 8, 0.7);
                 const std::vector<Matrix> out1 = liebn_forward(st, probe, ExecPolicy::Serial);
                 const std::vector<Matrix> out2 = liebn_forward(st, probe, ExecPolicy::Parallel);
                 auto describe = [&] { return std::string("eval repeat"); };
                 for (std::size_t i = 0; i < out1.size(); ++i)
                   ck.observe((out1[i] - out2[i]).cwiseAbs().maxCoeff(), describe);
                 ck.observe((st.running_mean - rm).cwiseAbs().maxCoeff(), describe);
                 ck.observe(std::abs(st.running_var - rv), describe);
               }
             });
  }

  // For the standard affine-invariant structure the scaling step is exactly a
  // matrix power of the centered point.
  list.add("liebn", "bn.scaling_specialization", "spd-aim (1,1,0) dim=3", 25, 1e-10,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             const BackendSpec spec{"spd-aim", 3, 1.0, 1.0, 0.0};
             const BackendPtr backend = make_backend(spec);
             for (long t = 0; t < 25; ++t) {
               TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
               const std::vector<Matrix> batch = random_batch(*backend, rng, 8, 0.6);
               LieBNState st = make_liebn_state(backend, backend->neutral(), 1.4, 1e-5, 0.1);
               const GroupBatchStats stats = batch_statistics(st, batch, ExecPolicy::Serial);
               const double factor = st.scale / std::sqrt(stats.variance + st.epsilon);
               const Matrix inv = backend->inverse(stats.mean);
               for (const Matrix& p : batch) {
                 const Matrix centered = backend->compose(inv, p);
                 const Matrix scaled = backend->scale_from_neutral(centered, factor);
                 const Matrix powed = kern::mpow(centered, factor);
                 ck.observe(rel(scaled, powed), [&] { return "P=" + mat_str(p); });
               }
             }
           });

  // gamma_train schedule: exact boundary values and monotonicity.
  list.add("liebn", "bn.gamma_train", "boundaries and monotonicity", 1, 0.0,
           [](Check& ck, std::uint64_t, std::uint32_t) {
             auto describe = [] { return std::string("gamma_train boundary"); };
             for (int K : {2, 3, 5, 8}) {
               for (double rho : {0.5, 0.25, 0.125}) {
                 ck.observe(std::abs(gamma_train(K, K, rho) - rho), describe);
                 ck.observe(std::abs(gamma_train(K, K + 7, rho) - rho), describe);
                 ck.observe(std::abs(gamma_train(K, 1, rho) - 1.0), describe);
               }
               // monotone nondecreasing up to k = K
               double prev = gamma_train(K, 1, 0.3);
               for (long k = 2; k <= K; ++k) {
                 const double g = gamma_train(K, k, 0.3);
                 ck.observe(std::max(0.0, prev - g), describe);
                 prev = g;
               }
             }
             // direct value: K=3, k=2, rho=0.5 -> 1 - sqrt(0.5) + 0.5
             ck.observe(std::abs(gamma_train(3, 2, 0.5) - 0.7928932188134525) > 1e-12 ? 1.0 : 0.0,
                        describe);
             // K < 2 must be rejected
             bool threw = false;
             try {
               gamma_train(1, 0, 0.5);
             } catch (const InvalidInput&) {
               threw = true;
             }
             ck.observe(threw ? 0.0 : 1.0, describe);
           });

  // Momentum variant against the plain forward.
  for (const char* family : {"euclidean", "spd-lem",
                                   "spd-lcm"}) {
    list.add("liebn", "bn.mliebn_equiv", std::string(family) + " fixed gamma_train (bitwise)", 15, 0.0,
             [family](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               BackendSpec spec;
               spec.family = family;
               spec.dim = 2;
               const BackendPtr backend = make_backend(spec);
               TrialRng rng(seed, stream, 0);
               const Matrix b = random_bias(*backend, rng);
               const double gamma = 0.3;
               LieBNState plain = make_liebn_state(backend, b, 1.3, 1e-5, gamma);
               MLieBNState momentum = make_mliebn_state(backend, b, 1.3, 1e-5, gamma, 4, 0.5);
               momentum.gamma_train_override = gamma;
               auto describe = [&] { return std::string("family=") + family; };
               for (long t = 0; t < 15; ++t) {
                 TrialRng step_rng(seed, stream, static_cast<std::uint64_t>(t) + 1);
                 const std::vector<Matrix> batch = random_batch(*backend, step_rng, 6, 0.6);
                 liebn_forward(plain, batch, ExecPolicy::Serial);
                 mliebn_forward(momentum, batch, ExecPolicy::Serial);
                 ck.observe((plain.running_mean - momentum.train_mean).cwiseAbs().maxCoeff(),
                            describe);
                 ck.observe((plain.running_mean - momentum.eval_mean).cwiseAbs().maxCoeff(),
                            describe);
                 ck.observe(std::abs(plain.running_var - momentum.train_var), describe);
                 ck.observe(std::abs(plain.running_var - momentum.eval_var), describe);
               }
               plain.mode = Mode::Eval;
               momentum.mode = Mode::Eval;
               TrialRng probe_rng(seed, stream, 99);
               const std::vector<Matrix> probe = random_batch(*backend, probe_rng, 6, 0.6);
               const std::vector<Matrix> a = liebn_forward(plain, probe, ExecPolicy::Serial);
               const std::vector<Matrix> c = mliebn_forward(momentum, probe, ExecPolicy::Serial);
               for (std::size_t i = 0; i < a.size(); ++i)
                 ck.observe((a[i] - c[i]).cwiseAbs().maxCoeff(), describe);
             });
    list.add("liebn", "bn.mliebn_equiv", std::string(family) + " rho=1 tracks batch statistics", 10, 1e-12,
             [family](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               BackendSpec spec;
               spec.family = family;
               spec.dim = 2;
               const BackendPtr backend = make_backend(spec);
               TrialRng rng(seed, stream, 0);
               const Matrix b = random_bias(*backend, rng);
               MLieBNState momentum = make_mliebn_state(backend, b, 0.9, 1e-5, 0.2, 3, 1.0);
               LieBNState plain = make_liebn_state(backend, b, 0.9, 1e-5, 0.2);
               auto describe = [&] { return std::string("family=") + family; };
               for (long t = 0; t < 10; ++t) {
                 TrialRng step_rng(seed, stream, static_cast<std::uint64_t>(t) + 1);
                 const std::vector<Matrix> batch = random_batch(*backend, step_rng, 6, 0.6);
                 const GroupBatchStats stats = batch_statistics(plain, batch, ExecPolicy::Serial);
                 const std::vector<Matrix> out_m = mliebn_forward(momentum, batch, ExecPolicy::Serial);
                 const std::vector<Matrix> out_p = liebn_forward(plain, batch, ExecPolicy::Serial);
                 ck.observe(rel(momentum.train_mean, stats.mean), describe);
                 ck.observe(std::abs(momentum.train_var - stats.variance), describe);
                 for (std::size_t i = 0; i < out_m.size(); ++i)
                   ck.observe(rel(out_m[i], out_p[i]), describe);
               }
             });
  }

  // Domain bank equals isolated per-domain runs.
  for (const char* family : {"euclidean", "spd-lem"}) {
    list.add("liebn", "bn.dsm_partition", family, 10, 1e-12,
             [family](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               BackendSpec spec;
               spec.family = family;
               spec.dim = 2;
               const BackendPtr backend = make_backend(spec);
               const std::vector<int> domains = {0, 1, 2};
               DsmLieBNBank bank = make_dsm_bank(backend, domains, 1.2, 1e-5, 0.25, 3, 0.5);
               std::map<int, MLieBNState> isolated;
               for (int id : domains)
                 isolated.emplace(id, make_mliebn_state(backend, backend->neutral(), 1.2, 1e-5,
                                                        0.25, 3, 0.5));
               auto describe = [&] { return std::string("family=") + family; };
               for (long t = 0; t < 10; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 // domain 2 stays empty: its state must remain untouched
                 const std::vector<int> ids = {0, 1, 0, 0, 1, 1, 0, 1};
                 const std::vector<Matrix> batch = random_batch(*backend, rng, 8, 0.6);
                 const std::vector<Matrix> out =
                     dsm_liebn_forward(bank, batch, ids, ExecPolicy::Serial);
                 for (int id : {0, 1}) {
                   std::vector<Matrix> sub;
                   std::vector<std::size_t> where;
                   for (std::size_t i = 0; i < ids.size(); ++i)
                     if (ids[i] == id) {
                       sub.push_back(batch[i]);
                       where.push_back(i);
                     }
                   const std::vector<Matrix> alone =
                       mliebn_forward(isolated.at(id), sub, ExecPolicy::Serial);
                   for (std::size_t j = 0; j < where.size(); ++j)
                     ck.observe((out[where[j]] - alone[j]).cwiseAbs().maxCoeff(), describe);
                 }
                 const MLieBNState& untouched = bank.states.at(2);
                 ck.observe((untouched.train_mean - backend->neutral()).cwiseAbs().maxCoeff(),
                            describe);
                 ck.observe(std::abs(untouched.train_var - 1.0), describe);
                 ck.observe(untouched.step == 0 ? 0.0 : 1.0, describe);
               }
               bool threw = false;
               try {
                 TrialRng rng(seed, stream, 1000);
                 const std::vector<Matrix> batch = random_batch(*backend, rng, 2, 0.5);
                 const std::vector<int> bad = {0, 7};
                 dsm_liebn_forward(bank, batch, bad, ExecPolicy::Serial);
               } catch (const UnknownDomain&) {
                 threw = true;
               }
               ck.observe(threw ? 0.0 : 1.0, describe);
             });
  }

  // Round trip of the self-describing state record.
  list.add("liebn", "bn.state_serialization", "all families", 5, 0.0,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             const std::vector<BackendSpec> specs = {
                 {"spd-aim", 3, 1.5, 1.0, 0.1},
                 {"spd-lem", 3, 1.0, 2.0, 0.05},
                 {"spd-lcm", 3, 0.5, 1.0, 0.0},
                 {"so", 3, 1.0, 1.0, 0.0},
                 {"euclidean", 4, 1.0, 1.0, 0.0},
             };
             long trial = 0;
             for (const BackendSpec& spec : specs) {
               TrialRng rng(seed, stream, static_cast<std::uint64_t>(trial++));
               const BackendPtr backend = make_backend(spec);
               LieBNState st =
                   make_liebn_state(spec, backend->exp_at_neutral(tangent_sample(*backend, rng, 0.4)),
                                    1.7, 1e-6, 0.15);
               const std::vector<Matrix> batch = random_batch(*backend, rng, 6,
                                                              spec.family == "so" ? 0.2 : 0.6);
               liebn_forward(st, batch, ExecPolicy::Serial);
               const std::string a = state_to_json(st);
               const LieBNState parsed = state_from_json(a);
               const std::string b = state_to_json(parsed);
               auto describe = [&] { return "family=" + spec.family; };
               ck.observe(a == b ? 0.0 : 1.0, describe);
               ck.observe((parsed.bias - st.bias).cwiseAbs().maxCoeff(), describe);
               ck.observe((parsed.running_mean - st.running_mean).cwiseAbs().maxCoeff(), describe);
               ck.observe(std::abs(parsed.running_var - st.running_var), describe);
               ck.observe(std::abs(parsed.scale - st.scale), describe);
             }
           });
}

}  // namespace liebn::verify_detail
