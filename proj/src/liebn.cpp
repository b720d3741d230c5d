#include "liebn/liebn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace liebn {

namespace {

void check_state_params(double scale, double epsilon, double momentum) {
  if (scale == 0.0) throw InvalidInput("liebn state: scale must be nonzero");
  if (!(epsilon > 0.0)) throw InvalidInput("liebn state: epsilon must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0))
    throw InvalidInput("liebn state: momentum outside [0, 1]");
}

void check_batch(const LieGroupBackend& backend, std::span<const Matrix> batch) {
  if (batch.empty()) throw InvalidInput("liebn: empty batch");
  for (const Matrix& p : batch) backend.validate_element(p);
}

// Shared moving-average update so every variant follows bitwise the same
// recursion.
void update_pair(const LieGroupBackend& backend, Matrix& mean, double& var,
                 const GroupBatchStats& stats, double gamma) {
  mean = backend.wfm_pair(stats.mean, mean, gamma);
  var = (1.0 - gamma) * var + gamma * stats.variance;
}

std::vector<Matrix> normalize_with(const LieGroupBackend& backend, const Matrix& bias,
                                   double scale, double epsilon, std::span<const Matrix> batch,
                                   const GroupBatchStats& stats, ExecPolicy policy) {
  const Matrix mean_inv = backend.inverse(stats.mean);
  const double factor = scale / std::sqrt(stats.variance + epsilon);
  std::vector<Matrix> out(batch.size());
  parallel_for(policy, static_cast<std::int64_t>(batch.size()), [&](std::int64_t i) {
    const Matrix centered = backend.compose(mean_inv, batch[i]);
    const Matrix scaled = backend.scale_from_neutral(centered, factor);
    out[i] = backend.compose(bias, scaled);
  });
  return out;
}

}  // namespace

LieBNState make_liebn_state(BackendPtr backend, Matrix bias, double scale, double epsilon,
                            double momentum, std::optional<BackendSpec> spec) {
  if (!backend) throw InvalidInput("liebn state: null backend");
  check_state_params(scale, epsilon, momentum);
  backend->validate_element(bias);
  LieBNState st;
  st.backend = std::move(backend);
  st.bias = std::move(bias);
  st.scale = scale;
  st.epsilon = epsilon;
  st.momentum = momentum;
  st.running_mean = st.backend->neutral();
  st.running_var = 1.0;
  st.mode = Mode::Train;
  st.spec = std::move(spec);
  return st;
}

LieBNState make_liebn_state(const BackendSpec& spec, Matrix bias, double scale, double epsilon,
                            double momentum) {
  return make_liebn_state(make_backend(spec), std::move(bias), scale, epsilon, momentum, spec);
}

GroupBatchStats batch_statistics(const LieBNState& state, std::span<const Matrix> batch,
                                 ExecPolicy policy) {
  check_batch(*state.backend, batch);
  GroupBatchStats stats;
  stats.mean = state.backend->frechet_mean(batch, {}, policy);
  stats.variance = state.backend->frechet_variance(batch, stats.mean, {}, policy);
  return stats;
}

void update_running(LieBNState& state, const GroupBatchStats& stats) {
  if (state.mode != Mode::Train)
    throw InvalidInput("update_running: running statistics only move in train mode");
  update_pair(*state.backend, state.running_mean, state.running_var, stats, state.momentum);
}

std::vector<Matrix> normalize_batch(const LieBNState& state, std::span<const Matrix> batch,
                                    const GroupBatchStats& stats, ExecPolicy policy) {
  check_batch(*state.backend, batch);
  return normalize_with(*state.backend, state.bias, state.scale, state.epsilon, batch, stats,
                        policy);
}

std::vector<Matrix> liebn_forward(LieBNState& state, std::span<const Matrix> batch,
                                  ExecPolicy policy) {
  if (state.mode == Mode::Train) {
    const GroupBatchStats stats = batch_statistics(state, batch, policy);
    update_running(state, stats);
    return normalize_batch(state, batch, stats, policy);
  }
  const GroupBatchStats stats{state.running_mean, state.running_var};
  return normalize_batch(state, batch, stats, policy);
}

std::vector<Matrix> liebn_forward_pullback(LieBNState& state, std::span<const Matrix> batch,
                                           ExecPolicy policy) {
  const LieGroupBackend& backend = *state.backend;
  if (!backend.has_pullback_route())
    throw UnsupportedBackend(backend.describe() + ": no pullback route for the forward pass");
  check_batch(backend, batch);

  std::vector<Matrix> mapped(batch.size());
  parallel_for(policy, static_cast<std::int64_t>(batch.size()),
               [&](std::int64_t i) { mapped[i] = backend.pullback_map(batch[i]); });

  LieBNState codomain;
  codomain.backend = backend.pullback_codomain();
  codomain.bias = backend.pullback_map(state.bias);
  codomain.scale = state.scale;
  codomain.epsilon = state.epsilon;
  codomain.momentum = state.momentum;
  codomain.running_mean = backend.pullback_map(state.running_mean);
  codomain.running_var = state.running_var;
  codomain.mode = state.mode;

  std::vector<Matrix> normalized = liebn_forward(codomain, mapped, policy);

  if (state.mode == Mode::Train) {
    state.running_mean = backend.pullback_unmap(codomain.running_mean);
    state.running_var = codomain.running_var;
  }
  std::vector<Matrix> out(normalized.size());
  parallel_for(policy, static_cast<std::int64_t>(normalized.size()),
               [&](std::int64_t i) { out[i] = backend.pullback_unmap(normalized[i]); });
  return out;
}

double gamma_train(int K, long k, double rho) {
  if (K < 2) throw InvalidInput("gamma_train: K must be >= 2");
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("gamma_train: rho outside (0, 1]");
  if (k < 0) throw InvalidInput("gamma_train: k must be nonnegative");
  const double exponent = static_cast<double>(std::max<long>(K - k, 0)) / (K - 1);
  return 1.0 - std::pow(rho, exponent) + rho;
}

MLieBNState make_mliebn_state(BackendPtr backend, Matrix bias, double scale, double epsilon,
                              double momentum, int schedule_K, double rho,
                              std::optional<BackendSpec> spec) {
  if (!backend) throw InvalidInput("mliebn state: null backend");
  check_state_params(scale, epsilon, momentum);
  if (schedule_K < 2) throw InvalidInput("mliebn state: K must be >= 2");
  if (!(rho > 0.0 && rho <= 1.0)) throw InvalidInput("mliebn state: rho outside (0, 1]");
  backend->validate_element(bias);
  MLieBNState st;
  st.backend = std::move(backend);
  st.bias = std::move(bias);
  st.scale = scale;
  st.epsilon = epsilon;
  st.momentum = momentum;
  st.schedule_K = schedule_K;
  st.step = 0;
  st.rho = rho;
  st.train_mean = st.backend->neutral();
  st.train_var = 1.0;
  st.eval_mean = st.backend->neutral();
  st.eval_var = 1.0;
  st.mode = Mode::Train;
  st.spec = std::move(spec);
  return st;
}

std::vector<Matrix> mliebn_forward(MLieBNState& state, std::span<const Matrix> batch,
                                   ExecPolicy policy) {
  const LieGroupBackend& backend = *state.backend;
  check_batch(backend, batch);
  if (state.mode == Mode::Train) {
    GroupBatchStats stats;
    stats.mean = backend.frechet_mean(batch, {}, policy);
    stats.variance = backend.frechet_variance(batch, stats.mean, {}, policy);
    state.step += 1;
    const double gt = state.gamma_train_override
                          ? *state.gamma_train_override
                          : gamma_train(state.schedule_K, state.step, state.rho);
    update_pair(backend, state.train_mean, state.train_var, stats, gt);
    update_pair(backend, state.eval_mean, state.eval_var, stats, state.momentum);
    const GroupBatchStats governing{state.train_mean, state.train_var};
    return normalize_with(backend, state.bias, state.scale, state.epsilon, batch, governing,
                          policy);
  }
  const GroupBatchStats governing{state.eval_mean, state.eval_var};
  return normalize_with(backend, state.bias, state.scale, state.epsilon, batch, governing, policy);
}

DsmLieBNBank make_dsm_bank(const BackendPtr& backend, std::span<const int> domain_ids,
                           double shared_scale, double epsilon, double momentum, int schedule_K,
                           double rho) {
  if (domain_ids.empty()) throw InvalidInput("dsm bank: no domains");
  DsmLieBNBank bank;
  for (int id : domain_ids) {
    if (bank.states.count(id)) throw InvalidInput("dsm bank: duplicate domain id");
    bank.states.emplace(id, make_mliebn_state(backend, backend->neutral(), shared_scale, epsilon,
                                              momentum, schedule_K, rho));
  }
  return bank;
}

std::vector<Matrix> dsm_liebn_forward(DsmLieBNBank& bank, std::span<const Matrix> batch,
                                      std::span<const int> domain_ids, ExecPolicy policy) {
  if (batch.size() != domain_ids.size())
    throw InvalidInput("dsm forward: one domain id per element required");
  std::map<int, std::vector<std::size_t>> routing;
  for (std::size_t i = 0; i < domain_ids.size(); ++i) {
    if (!bank.states.count(domain_ids[i])) {
      std::ostringstream os;
      os << "dsm forward: unknown domain id " << domain_ids[i];
      throw UnknownDomain(os.str());
    }
    routing[domain_ids[i]].push_back(i);
  }
  std::vector<Matrix> out(batch.size());
  for (auto& [id, indices] : routing) {
    MLieBNState& st = bank.states.at(id);
    st.mode = bank.mode;
    std::vector<Matrix> sub;
    sub.reserve(indices.size());
    for (std::size_t i : indices) sub.push_back(batch[i]);
    std::vector<Matrix> norm = mliebn_forward(st, sub, policy);
    for (std::size_t j = 0; j < indices.size(); ++j) out[indices[j]] = std::move(norm[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) entries.push_back(m(i, j));
  return entries;
}

Matrix matrix_from_json(const nlohmann::json& entries, int rows, int cols) {
  if (static_cast<int>(entries.size()) != rows * cols)
    throw InvalidInput("state_from_json: matrix entry count mismatch");
  Matrix m(rows, cols);
  int k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = entries[k++].get<double>();
  return m;
}

}  // namespace

std::string state_to_json(const LieBNState& state) {
  if (!state.spec)
    throw InvalidInput("state_to_json: state has no backend spec to describe itself with");
  nlohmann::ordered_json j;
  j["family"] = state.spec->family;
  j["dim"] = state.spec->dim;
  j["theta"] = state.spec->theta;
  j["alpha"] = state.spec->alpha;
  j["beta"] = state.spec->beta;
  j["bias"] = matrix_to_json(state.bias);
  j["scale"] = state.scale;
  j["epsilon"] = state.epsilon;
  j["momentum"] = state.momentum;
  j["running_mean"] = matrix_to_json(state.running_mean);
  j["running_var"] = state.running_var;
  j["mode"] = state.mode == Mode::Train ? "train" : "eval";
  return j.dump(2);
}

LieBNState state_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("state_from_json: ") + e.what());
  }
  BackendSpec spec;
  spec.family = j.at("family").get<std::string>();
  spec.dim = j.at("dim").get<int>();
  spec.theta = j.at("theta").get<double>();
  spec.alpha = j.at("alpha").get<double>();
  spec.beta = j.at("beta").get<double>();
  BackendPtr backend = make_backend(spec);
  LieBNState st = make_liebn_state(backend, backend->neutral(), j.at("scale").get<double>(),
                                   j.at("epsilon").get<double>(), j.at("momentum").get<double>(),
                                   spec);
  st.bias = matrix_from_json(j.at("bias"), backend->rows(), backend->cols());
  backend->validate_element(st.bias);
  st.running_mean = matrix_from_json(j.at("running_mean"), backend->rows(), backend->cols());
  backend->validate_element(st.running_mean);
  st.running_var = j.at("running_var").get<double>();
  if (!(st.running_var > 0.0)) throw InvalidInput("state_from_json: running_var must be positive");
  st.mode = j.at("mode").get<std::string>() == "eval" ? Mode::Eval : Mode::Train;
  return st;
}

}  // namespace liebn
