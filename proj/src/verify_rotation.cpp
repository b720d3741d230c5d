#include "liebn/so_geometry.hpp"
#include "verify_internal.hpp"

namespace liebn::verify_detail {

void add_rotation_tasks(TaskList& list, const std::vector<int>& dims) {
  std::vector<int> so_dims;
  for (int d : dims)
    if (d >= 2 && d <= 8) so_dims.push_back(d);
  if (so_dims.empty()) so_dims = {2, 3};

  for (int dim : so_dims) {
    list.add("rotation", "so.exp_log_inverse", "dim=" + std::to_string(dim), 200, 1e-9,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 200; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const RotationMatrix r = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 const RotationMatrix s = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 auto describe = [&] {
                   return "R=" + mat_str(r.mat()) + " S=" + mat_str(s.mat());
                 };
                 const SkewMatrix v = so_log(r, s);
                 ck.observe((so_exp(r, v).mat() - s.mat()).norm(), describe);
                 const SkewMatrix small = SkewMatrix::project(rng.skew(dim, 1.2));
                 const RotationMatrix moved = so_exp(r, small);
                 ck.observe((so_log(r, moved).full() - small.full()).norm(), describe);
               }
             });
    list.add("rotation", "so.left_invariance", "dim=" + std::to_string(dim), 200, 1e-9,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 200; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const RotationMatrix r1 = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 const RotationMatrix r2 = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 const RotationMatrix q = RotationMatrix::trusted(rng.rotation(dim, 2.0));
                 const double base = so_distance(r1, r2);
                 const RotationMatrix qr1 = RotationMatrix::trusted(q.mat() * r1.mat());
                 const RotationMatrix qr2 = RotationMatrix::trusted(q.mat() * r2.mat());
                 ck.observe(std::abs(so_distance(qr1, qr2) - base) / std::max(1.0, base), [&] {
                   return "R1=" + mat_str(r1.mat()) + " R2=" + mat_str(r2.mat()) +
                          " Q=" + mat_str(q.mat());
                 });
               }
             });
    list.add("rotation", "so.geodesic_arclength", "dim=" + std::to_string(dim), 100, 1e-9,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 100; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const RotationMatrix r = RotationMatrix::trusted(rng.rotation(dim, 1.0));
                 const RotationMatrix s = RotationMatrix::trusted(rng.rotation(dim, 1.0));
                 auto describe = [&] {
                   return "R=" + mat_str(r.mat()) + " S=" + mat_str(s.mat());
                 };
                 ck.observe((so_geodesic(r, s, 0.0).mat() - r.mat()).norm(), describe);
                 ck.observe((so_geodesic(r, s, 1.0).mat() - s.mat()).norm(), describe);
                 const double total = so_distance(r, s);
                 for (double tt : {0.25, 0.5, 0.75}) {
                   const double part = so_distance(r, so_geodesic(r, s, tt));
                   ck.observe(std::abs(part - tt * total) / std::max(1.0, total), describe);
                 }
               }
             });
    list.add("rotation", "so.transport_isometry", "dim=" + std::to_string(dim), 100, 1e-10,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 100; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const RotationMatrix r = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 const RotationMatrix s = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 const Matrix h = r.mat() * rng.skew(dim, 1.0);
                 const Matrix out = so_transport(r, s, h);
                 auto describe = [&] { return "R=" + mat_str(r.mat()) + " H=" + mat_str(h); };
                 ck.observe(std::abs(out.norm() - h.norm()), describe);
                 ck.observe((s.mat().transpose() * out - r.mat().transpose() * h).norm(), describe);
               }
             });
    list.add("rotation", "so.projection", "dim=" + std::to_string(dim), 100, 1e-12,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 100; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const RotationMatrix r = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 const Matrix v = rng.skew(dim, 1.0);
                 auto describe = [&] { return "R=" + mat_str(r.mat()) + " V=" + mat_str(v); };
                 ck.observe((so_project(r, r.mat() * v).full() - v).norm(), describe);
                 ck.observe(so_project(r, r.mat()).full().norm(), describe);
                 const Matrix u = rng.gaussian(dim, dim);
                 const Matrix pu = so_project(r, u).full();
                 ck.observe((pu + pu.transpose()).norm(), describe);
               }
             });
    list.add("rotation", "so.retraction_order", "dim=" + std::to_string(dim), 50, 0.0,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               // error(eps) = O(eps^2): a 10x step cut must shrink the error by
               // a factor in [50, 200].
               for (long t = 0; t < 50; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const RotationMatrix r = RotationMatrix::trusted(rng.rotation(dim, 1.5));
                 const Matrix v = rng.skew(dim, 1.0);
                 auto err = [&](double eps) {
                   const RotationMatrix q = so_retract(r, r.mat() * (eps * v));
                   const RotationMatrix e = so_exp(r, SkewMatrix::project(eps * v));
                   return (q.mat() - e.mat()).norm();
                 };
                 const double ratio = err(1e-2) / std::max(err(1e-3), 1e-300);
                 double violation = 0.0;
                 if (ratio < 50.0) violation = 50.0 - ratio;
                 if (ratio > 200.0) violation = ratio - 200.0;
                 ck.observe(violation, [&] {
                   return "R=" + mat_str(r.mat()) + " V=" + mat_str(v) +
                          " ratio=" + std::to_string(ratio);
                 });
               }
             });
    list.add("rotation", "so.group_hooks", "dim=" + std::to_string(dim), 200, 1e-12,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               const Matrix e = Matrix::Identity(dim, dim);
               for (long t = 0; t < 200; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const Matrix a = rng.rotation(dim, 2.0);
                 const Matrix b = rng.rotation(dim, 2.0);
                 const Matrix c = rng.rotation(dim, 2.0);
                 auto describe = [&] { return "A=" + mat_str(a) + " B=" + mat_str(b); };
                 ck.observe(((a * b) * c - a * (b * c)).norm(), describe);
                 ck.observe((a * e - a).norm(), describe);
                 ck.observe((a.transpose() * a - e).norm(), describe);
               }
             });
    list.add("rotation", "so.frechet", "dim=" + std::to_string(dim), 20, 1e-8,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 20; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const RotationMatrix base = RotationMatrix::trusted(rng.rotation(dim, 0.6));
                 const Matrix v = rng.skew(dim, 0.5);
                 const std::vector<RotationMatrix> pair = {
                     RotationMatrix::trusted(base.mat() * kern::rot_exp(v)),
                     RotationMatrix::trusted(base.mat() * kern::rot_exp(-v))};
                 const RotationMatrix mid = so_frechet_mean(pair, {}, ExecPolicy::Serial);
                 auto describe = [&] { return "base=" + mat_str(base.mat()); };
                 ck.observe((mid.mat() - base.mat()).norm(), describe);
                 const RotationMatrix r = RotationMatrix::trusted(rng.rotation(dim, 0.5));
                 const RotationMatrix s =
                     RotationMatrix::trusted(r.mat() * kern::rot_exp(rng.skew(dim, 0.8)));
                 const std::vector<RotationMatrix> four = {r, r, r, s};
                 const RotationMatrix mean4 = so_frechet_mean(four, {}, ExecPolicy::Serial);
                 ck.observe((mean4.mat() - so_geodesic(r, s, 0.25).mat()).norm(), describe);
                 Matrix acc = Matrix::Zero(dim, dim);
                 for (const auto& p : four) acc += 0.25 * so_log(mean4, p).full();
                 ck.observe(acc.norm(), describe);
               }
             });
  }

  list.add("rotation", "so.closed_form_vs_generic", "dim=3", 500, 1e-9,
           [](Check& ck, std::uint64_t seed, std::uint32_t stream) {
             for (long t = 0; t < 500; ++t) {
               TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
               const Matrix v = rng.skew(3, 0.05 + 4.2 * rng.uniform());  // angles up to ~3.0
               auto describe = [&] { return "V=" + mat_str(v); };
               const Matrix closed = kern::so3_exp(v);
               ck.observe((closed - kern::exp_series(v)).norm(), describe);
               ck.observe((kern::so3_log(closed) - kern::rot_log_series(closed)).norm(), describe);
             }
           });
}

}  // namespace liebn::verify_detail
