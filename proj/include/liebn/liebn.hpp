#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "liebn/backend.hpp"

namespace liebn {

/// Frechet mean and variance of a batch of group elements.
struct GroupBatchStats {
  Matrix mean;
  double variance = 0.0;
};

enum class Mode { Train, Eval };

/// Batch-normalization state over a Lie group backend: bias B, scale s,
/// epsilon, momentum, and running statistics (initialized to the neutral
/// element and unit variance).
struct LieBNState {
  BackendPtr backend;
  Matrix bias;
  double scale = 1.0;
  double epsilon = 1e-5;
  double momentum = 0.1;
  Matrix running_mean;
  double running_var = 1.0;
  Mode mode = Mode::Train;
  /// Set when the state was built from a named backend spec; required for
  /// serialization.
  std::optional<BackendSpec> spec;
};

/// Validates invariants (s != 0, epsilon > 0, momentum in [0,1], bias a valid
/// group element) and initializes running statistics to (E, 1).
LieBNState make_liebn_state(BackendPtr backend, Matrix bias, double scale, double epsilon,
                            double momentum, std::optional<BackendSpec> spec = std::nullopt);
LieBNState make_liebn_state(const BackendSpec& spec, Matrix bias, double scale, double epsilon,
                            double momentum);

GroupBatchStats batch_statistics(const LieBNState& state, std::span<const Matrix> batch,
                                 ExecPolicy policy = ExecPolicy::Parallel);

/// Moving-average update, train mode only: the running mean moves toward the
/// batch mean with weight = momentum, the running variance is the matching
/// convex combination.
void update_running(LieBNState& state, const GroupBatchStats& stats);

/// Center to E by the group inverse of stats.mean, scale the dispersion by
/// s / sqrt(v^2 + eps) in the tangent space at E, bias towards B.
std::vector<Matrix> normalize_batch(const LieBNState& state, std::span<const Matrix> batch,
                                    const GroupBatchStats& stats,
                                    ExecPolicy policy = ExecPolicy::Parallel);

/// Full forward pass. Train: compute batch statistics, update running
/// statistics, normalize with the batch statistics. Eval: normalize with the
/// running statistics; the state is not modified.
std::vector<Matrix> liebn_forward(LieBNState& state, std::span<const Matrix> batch,
                                  ExecPolicy policy = ExecPolicy::Parallel);

/// Same normalization computed through the backend's pullback route: map the
/// batch, bias and running statistics into the codomain group, run the
/// forward there, map everything back. Agrees with liebn_forward.
std::vector<Matrix> liebn_forward_pullback(LieBNState& state, std::span<const Matrix> batch,
                                           ExecPolicy policy = ExecPolicy::Parallel);

/// Momentum schedule for the train-phase running statistics:
/// 1 - rho^((1/(K-1)) * max(K-k, 0)) + rho, with rho = 1/domains_per_batch.
double gamma_train(int K, long k, double rho);

/// Batch-normalization state with separate train/eval running pairs. The
/// train pair follows the gamma_train schedule (or a fixed override), the
/// eval pair the fixed momentum. Train-mode normalization uses the train
/// running pair after its update.
struct MLieBNState {
  BackendPtr backend;
  Matrix bias;
  double scale = 1.0;
  double epsilon = 1e-5;
  double momentum = 0.1;  // eval-pair momentum
  int schedule_K = 2;
  long step = 0;  // completed train forwards
  double rho = 1.0;
  std::optional<double> gamma_train_override;
  Matrix train_mean;
  double train_var = 1.0;
  Matrix eval_mean;
  double eval_var = 1.0;
  Mode mode = Mode::Train;
  std::optional<BackendSpec> spec;
};

MLieBNState make_mliebn_state(BackendPtr backend, Matrix bias, double scale, double epsilon,
                              double momentum, int schedule_K, double rho,
                              std::optional<BackendSpec> spec = std::nullopt);

std::vector<Matrix> mliebn_forward(MLieBNState& state, std::span<const Matrix> batch,
                                   ExecPolicy policy = ExecPolicy::Parallel);

/// Domain-specific bank: one MLieBN state per domain, bias fixed to E and one
/// scale shared by every domain.
struct DsmLieBNBank {
  std::map<int, MLieBNState> states;
  Mode mode = Mode::Train;
};

DsmLieBNBank make_dsm_bank(const BackendPtr& backend, std::span<const int> domain_ids,
                           double shared_scale, double epsilon, double momentum, int schedule_K,
                           double rho);

/// Routes each element to its domain's state; statistics are computed per
/// domain over that domain's sub-batch only. Domains without elements in the
/// batch are untouched.
std::vector<Matrix> dsm_liebn_forward(DsmLieBNBank& bank, std::span<const Matrix> batch,
                                      std::span<const int> domain_ids,
                                      ExecPolicy policy = ExecPolicy::Parallel);

/// Self-describing JSON record (backend spec, bias, scale, epsilon, momentum,
/// running statistics); real fields round-trip bit-exactly.
std::string state_to_json(const LieBNState& state);
LieBNState state_from_json(const std::string& text);

}  // namespace liebn
