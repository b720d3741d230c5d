#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "liebn/backend.hpp"
#include "liebn/philox.hpp"
#include "liebn/spd_geometry.hpp"
#include "liebn/verify.hpp"

namespace liebn::verify_detail {

/// Per-trial random inputs. Every trial owns one counter-RNG element, so the
/// values cannot depend on scheduling.
class TrialRng {
 public:
  TrialRng(std::uint64_t seed, std::uint32_t stream, std::uint64_t trial)
      : ns_(seed, stream), trial_(trial) {}

  double normal() { return ns_.normal(trial_, slot_++); }
  double uniform() { return ns_.uniform(trial_, slot_++); }

  Matrix gaussian(int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  Matrix symmetric(int n, double scale) {
    const Matrix a = gaussian(n, n);
    return scale * 0.5 * (a + a.transpose());
  }

  Matrix lower_tri(int n, double scale) {
    const Matrix a = gaussian(n, n);
    Matrix l = a.triangularView<Eigen::Lower>();
    return scale * l;
  }

  Matrix orthogonal(int n) {
    const Matrix a = gaussian(n, n);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
  }

  /// SPD with eigenvalues exp(U(-c/2, c/2)); condition number <= exp(c).
  Matrix spd(int n, double log_cond = 4.0) {
    const Matrix q = orthogonal(n);
    Vector ev(n);
    for (int i = 0; i < n; ++i) ev(i) = std::exp((uniform() - 0.5) * log_cond);
    const Matrix p = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (p + p.transpose());
  }

  /// Skew matrix scaled to the given Frobenius norm.
  Matrix skew(int n, double norm) {
    const Matrix a = gaussian(n, n);
    Matrix v = 0.5 * (a - a.transpose());
    const double vn = v.norm();
    if (vn > 0.0) v *= norm / vn;
    return v;
  }

  /// Rotation exp(V) with ||V||_F = norm; planar angles stay below norm/sqrt(2).
  Matrix rotation(int n, double norm);

 private:
  NormalStream ns_;
  std::uint64_t trial_;
  std::uint32_t slot_ = 0;
};

std::string mat_str(const Matrix& m);

inline double rel(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

/// Tracks the maximum violation and the inputs that produced it.
class Check {
 public:
  void observe(double violation, const std::function<std::string()>& describe) {
    ++count_;
    if (count_ == 1 || violation > max_) {
      max_ = violation;
      worst_ = describe();
    }
  }
  void observe(double violation) {
    observe(violation, [] { return std::string(); });
  }
  double max() const { return count_ ? max_ : 0.0; }
  const std::string& worst() const { return worst_; }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  std::string worst_;
  long count_ = 0;
};

struct Task {
  std::string suite;
  std::string property;
  std::string cell;
  long trials;
  double tolerance;
  std::uint32_t stream;
  std::function<void(Check&, std::uint64_t, std::uint32_t)> body;
};

class TaskList {
 public:
  void add(std::string suite, std::string property, std::string cell, long trials,
           double tolerance, std::function<void(Check&, std::uint64_t, std::uint32_t)> body) {
    tasks_.push_back(Task{std::move(suite), std::move(property), std::move(cell), trials,
                          tolerance, next_stream_++, std::move(body)});
  }
  const std::vector<Task>& tasks() const { return tasks_; }

 private:
  std::vector<Task> tasks_;
  std::uint32_t next_stream_ = 1;
};

std::string cell_name(const SpdMetric& m);

/// Metric grid per family: theta in {-1.5,-0.5,0.5,1,1.5} where admissible,
/// optionally crossed with beta in {0, 1/n^2}.
std::vector<SpdMetric> family_grid(SpdFamily family, int dim, bool ab_grid);

/// Tangent draw in a backend's chart at the neutral element.
Matrix tangent_sample(const LieGroupBackend& backend, TrialRng& rng, double spread);

/// Random batch around a random base point (or around E).
std::vector<Matrix> random_batch(const LieGroupBackend& backend, TrialRng& rng, int count,
                                 double spread, bool around_random_base = true);

// Suite builders.
void add_kernel_tasks(TaskList& list, const std::vector<int>& dims);
void add_spd_tasks(TaskList& list, const std::vector<int>& dims);
void add_rotation_tasks(TaskList& list, const std::vector<int>& dims);
void add_liebn_tasks(TaskList& list, const std::vector<int>& dims);
void add_gaussian_tasks(TaskList& list, const std::vector<int>& dims);

}  // namespace liebn::verify_detail
