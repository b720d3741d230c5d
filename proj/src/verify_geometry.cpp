#include "verify_internal.hpp"

namespace liebn::verify_detail {

void add_kernel_tasks(TaskList& list, const std::vector<int>& dims) {
  for (int dim : dims) {
    list.add("geometry", "mk.round_trips", "dim=" + std::to_string(dim), 200, 1e-10,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 200; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const Matrix p = rng.spd(dim, std::log(1e4));
                 auto describe = [&] { return "P=" + mat_str(p); };
                 const Matrix s = kern::mlog(p);
                 ck.observe(rel(kern::mexp(s), p), describe);
                 ck.observe(rel(kern::mlog(kern::mexp(s)), s), describe);
                 ck.observe(rel(kern::clog_inv(kern::clog(p)), p), describe);
                 for (double theta : {-1.5, 0.5, 2.0})
                   ck.observe(rel(kern::mpow(kern::mpow(p, 1.0 / theta), theta), p), describe);
               }
             });
  }

  for (int dim : dims) {
    if (dim > 6) continue;
    list.add("geometry", "mk.pow_conjugation", "dim=" + std::to_string(dim), 100, 1e-10,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 100; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const Matrix p = rng.spd(dim, 4.0);
                 const Matrix q = rng.orthogonal(dim);
                 auto describe = [&] { return "P=" + mat_str(p) + " Q=" + mat_str(q); };
                 ck.observe(rel(kern::mpow(p, 1.0), p), describe);
                 const Matrix conj = 0.5 * (q * p * q.transpose() +
                                            (q * p * q.transpose()).transpose().eval());
                 for (double theta : {-0.5, 0.7, 1.5})
                   ck.observe(rel(kern::mpow(conj, theta), q * kern::mpow(p, theta) * q.transpose()),
                              describe);
               }
             });
  }

  struct FunCase {
    ScalarFun f;
    const char* label;
  };
  const FunCase funs[] = {{ScalarFun::exp(), "exp"},         {ScalarFun::log(), "log"},
                          {ScalarFun::pow(0.5), "pow(0.5)"}, {ScalarFun::pow(-0.5), "pow(-0.5)"},
                          {ScalarFun::pow(1.5), "pow(1.5)"}, {ScalarFun::pow(-1.5), "pow(-1.5)"}};
  for (const FunCase& fc : funs) {
    list.add("geometry", "mk.vjp_fd", std::string("f=") + fc.label + " dims=2..6", 100, 1e-5,
             [fc](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               const double h = 1e-5;
               long trial = 0;
               for (int dim = 2; dim <= 6; ++dim) {
                 for (int t = 0; t < 20; ++t, ++trial) {
                   TrialRng rng(seed, stream, static_cast<std::uint64_t>(trial));
                   const Matrix p = rng.spd(dim, 2.0);
                   const Matrix g = rng.symmetric(dim, 1.0);
                   const Matrix vjp =
                       spd_fun_vjp(SpdMatrix::trusted(p), fc.f, SymMatrix::trusted(g)).mat();
                   // Central differences of tr(G^T f(S)) along the symmetric
                   // coordinate directions.
                   Matrix fd(dim, dim);
                   for (int i = 0; i < dim; ++i) {
                     for (int j = i; j < dim; ++j) {
                       Matrix d = Matrix::Zero(dim, dim);
                       if (i == j) {
                         d(i, i) = 1.0;
                       } else {
                         d(i, j) = d(j, i) = 1.0;
                       }
                       const double fp = (g.array() * kern::fun(p + h * d, fc.f).array()).sum();
                       const double fm = (g.array() * kern::fun(p - h * d, fc.f).array()).sum();
                       const double deriv = (fp - fm) / (2.0 * h);
                       if (i == j)
                         fd(i, i) = deriv;
                       else
                         fd(i, j) = fd(j, i) = 0.5 * deriv;
                     }
                   }
                   ck.observe((fd - vjp).norm() / std::max(1.0, vjp.norm()),
                              [&] { return "P=" + mat_str(p) + " G=" + mat_str(g); });
                 }
               }
             });
  }

  for (int dim : dims) {
    if (dim > 6) continue;
    list.add("geometry", "mk.chol_reconstruct", "dim=" + std::to_string(dim), 200, 1e-9,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               for (long t = 0; t < 200; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const Matrix p = rng.spd(dim, 6.0);
                 const Matrix l = kern::chol(p);
                 auto describe = [&] { return "P=" + mat_str(p); };
                 ck.observe(rel(l * l.transpose(), p), describe);
                 double det_l2 = 1.0;
                 for (int j = 0; j < dim; ++j) det_l2 *= l(j, j) * l(j, j);
                 const double det_p = p.determinant();
                 ck.observe(std::abs(det_l2 - det_p) / std::max(1e-12, std::abs(det_p)), describe);
               }
             });
  }
}

void add_spd_tasks(TaskList& list, const std::vector<int>& dims) {
  for (int dim : dims) {
    for (SpdFamily family : {SpdFamily::AIM, SpdFamily::LEM, SpdFamily::LCM}) {
      for (const SpdMetric& m : family_grid(family, dim, /*ab_grid=*/true)) {
        list.add("geometry", "spd.group_axioms", cell_name(m), 200, 1e-8,
                 [m](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                   const SpdMatrix e = group_identity(m);
                   for (long t = 0; t < 200; ++t) {
                     TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                     const SpdMatrix a = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                     const SpdMatrix b = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                     const SpdMatrix c = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                     auto describe = [&] {
                       return "A=" + mat_str(a.mat()) + " B=" + mat_str(b.mat()) +
                              " C=" + mat_str(c.mat());
                     };
                     const SpdMatrix ab_c = group_compose(m, group_compose(m, a, b), c);
                     const SpdMatrix a_bc = group_compose(m, a, group_compose(m, b, c));
                     ck.observe(rel(ab_c.mat(), a_bc.mat()), describe);
                     ck.observe(rel(group_compose(m, e, a).mat(), a.mat()), describe);
                     ck.observe(rel(group_compose(m, a, e).mat(), a.mat()), describe);
                     const SpdMatrix inv = group_inverse(m, a);
                     ck.observe(rel(group_compose(m, inv, a).mat(), e.mat()), describe);
                     ck.observe(rel(group_compose(m, a, inv).mat(), e.mat()), describe);
                   }
                 });
        list.add("geometry", "spd.left_invariance", cell_name(m), 200, 1e-8,
                 [m](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                   for (long t = 0; t < 200; ++t) {
                     TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                     const SpdMatrix p1 = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                     const SpdMatrix p2 = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                     const SpdMatrix q = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                     const double base = geodesic_distance(m, p1, p2);
                     const double moved =
                         geodesic_distance(m, group_compose(m, q, p1), group_compose(m, q, p2));
                     ck.observe(std::abs(base - moved) / std::max(1.0, base), [&] {
                       return "P1=" + mat_str(p1.mat()) + " P2=" + mat_str(p2.mat()) +
                              " Q=" + mat_str(q.mat());
                     });
                   }
                 });
        if (family != SpdFamily::AIM) {
          list.add("geometry", "spd.bi_invariance", cell_name(m), 200, 1e-8,
                   [m](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                     for (long t = 0; t < 200; ++t) {
                       TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                       const SpdMatrix p1 = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                       const SpdMatrix p2 = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                       const SpdMatrix q = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                       const double base = geodesic_distance(m, p1, p2);
                       const double moved =
                           geodesic_distance(m, group_compose(m, p1, q), group_compose(m, p2, q));
                       ck.observe(std::abs(base - moved) / std::max(1.0, base), [&] {
                         return "P1=" + mat_str(p1.mat()) + " P2=" + mat_str(p2.mat()) +
                                " Q=" + mat_str(q.mat());
                       });
                     }
                   });
        }
      }
    }
  }

  // The theta-deformed log-Euclidean path reproduces the undeformed distance.
  for (int dim : dims) {
    for (double theta : {0.5, 1.5}) {
      for (double beta : {0.0, 1.0 / (static_cast<double>(dim) * dim)}) {
        std::ostringstream cell;
        cell << "dim=" << dim << " theta=" << theta << " beta=" << beta;
        list.add("geometry", "spd.deformation_lem", cell.str(), 100, 1e-9,
                 [dim, theta, beta](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                   const SpdMetric lem(SpdFamily::LEM, dim, 1.0, 1.0, beta);
                   for (long t = 0; t < 100; ++t) {
                     TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                     const SpdMatrix p = SpdMatrix::trusted(rng.spd(dim, 3.0));
                     const SpdMatrix q = SpdMatrix::trusted(rng.spd(dim, 3.0));
                     const double direct = geodesic_distance(lem, p, q);
                     const double deformed = lem_deformed_distance(p, q, theta, 1.0, beta);
                     ck.observe(std::abs(direct - deformed) / std::max(1.0, direct), [&] {
                       return "P=" + mat_str(p.mat()) + " Q=" + mat_str(q.mat());
                     });
                   }
                 });
      }
    }
  }

  // theta -> 0 limit of the LCM metric: half Frobenius minus a quarter of the
  // diagonal product, composed with the log differential.
  for (int dim : dims) {
    if (dim > 5) continue;
    list.add("geometry", "spd.deformation_lcm_limit", "dim=" + std::to_string(dim), 100, 1e-3,
             [dim](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               const SpdMetric m(SpdFamily::LCM, dim, 1e-4, 1.0, 0.0);
               for (long t = 0; t < 100; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const SpdMatrix p = SpdMatrix::trusted(rng.spd(dim, 2.0));
                 const Matrix v = rng.symmetric(dim, 1.0);
                 const Matrix w = rng.symmetric(dim, 1.0);
                 const double got =
                     metric_inner_at(m, p, tangent_from_sym(m, p, v), tangent_from_sym(m, p, w));
                 const EigPair e = kern::eig_sym(p.mat());
                 const Matrix dv = kern::dk_apply(e, ScalarFun::log(), v);
                 const Matrix dw = kern::dk_apply(e, ScalarFun::log(), w);
                 const double want = 0.5 * (dv.array() * dw.array()).sum() -
                                     0.25 * (dv.diagonal().array() * dw.diagonal().array()).sum();
                 ck.observe(std::abs(got - want) / std::max(1.0, std::abs(want)), [&] {
                   return "P=" + mat_str(p.mat()) + " V=" + mat_str(v) + " W=" + mat_str(w);
                 });
               }
             });
  }

  for (int dim : dims) {
    for (SpdFamily family : {SpdFamily::AIM, SpdFamily::LEM, SpdFamily::LCM}) {
      for (const SpdMetric& m : family_grid(family, dim, /*ab_grid=*/false)) {
        if (m.theta() < 0.0) continue;
        list.add("geometry", "spd.frechet_first_order", cell_name(m), 20, 1e-8,
                 [m](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                   for (long t = 0; t < 20; ++t) {
                     TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                     std::vector<SpdMatrix> pts;
                     for (int i = 0; i < 10; ++i)
                       pts.push_back(SpdMatrix::trusted(rng.spd(m.dim(), 3.0)));
                     const SpdBatch batch(m, pts);
                     const SpdMatrix mean = frechet_mean(batch, {}, ExecPolicy::Serial);
                     Matrix acc = Matrix::Zero(m.dim(), m.dim());
                     for (const auto& p : pts) acc += log_at(m, mean, p);
                     acc /= static_cast<double>(pts.size());
                     ck.observe(acc.norm(), [&] { return "mean=" + mat_str(mean.mat()); });
                   }
                 });
        list.add("geometry", "spd.mean_homogeneity", cell_name(m), 20, 1e-7,
                 [m](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                   for (long t = 0; t < 20; ++t) {
                     TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                     std::vector<SpdMatrix> pts;
                     for (int i = 0; i < 8; ++i)
                       pts.push_back(SpdMatrix::trusted(rng.spd(m.dim(), 3.0)));
                     const SpdMatrix b = SpdMatrix::trusted(rng.spd(m.dim(), 3.0));
                     const SpdMatrix mean = frechet_mean(SpdBatch(m, pts), {}, ExecPolicy::Serial);
                     std::vector<SpdMatrix> moved;
                     for (const auto& p : pts) moved.push_back(group_compose(m, b, p));
                     const SpdMatrix mean_moved =
                         frechet_mean(SpdBatch(m, moved), {}, ExecPolicy::Serial);
                     const SpdMatrix want = group_compose(m, b, mean);
                     ck.observe(rel(mean_moved.mat(), want.mat()),
                                [&] { return "B=" + mat_str(b.mat()); });
                   }
                 });
        list.add("geometry", "spd.dispersion_scaling", cell_name(m), 20, 1e-8,
                 [m](Check& ck, std::uint64_t seed, std::uint32_t stream) {
                   const SpdMatrix e = group_identity(m);
                   for (long t = 0; t < 20; ++t) {
                     TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                     std::vector<SpdMatrix> pts;
                     std::vector<double> w;
                     double wsum = 0.0;
                     for (int i = 0; i < 8; ++i) {
                       pts.push_back(SpdMatrix::trusted(rng.spd(m.dim(), 3.0)));
                       w.push_back(0.1 + rng.uniform());
                       wsum += w.back();
                     }
                     for (double& x : w) x /= wsum;
                     double base = 0.0;
                     for (std::size_t i = 0; i < pts.size(); ++i) {
                       const double d = geodesic_distance(m, pts[i], e);
                       base += w[i] * d * d;
                     }
                     for (double s : {0.5, 2.0, -1.0}) {
                       double scaled = 0.0;
                       for (std::size_t i = 0; i < pts.size(); ++i) {
                         const SpdMatrix mapped = exp_at(m, e, s * log_at(m, e, pts[i]));
                         const double d = geodesic_distance(m, mapped, e);
                         scaled += w[i] * d * d;
                       }
                       ck.observe(std::abs(scaled - s * s * base) / std::max(1e-12, s * s * base),
                                  [&] { return "s=" + std::to_string(s); });
                     }
                   }
                 });
      }
    }
  }

  // Direct LCM distance against a finite-difference geodesic-length estimate
  // through the family-chart metric.
  for (double theta : {0.5, 1.0, 1.5}) {
    std::ostringstream cell;
    cell << "dim=2 theta=" << theta;
    list.add("geometry", "spd.lcm_pullback_distance", cell.str(), 20, 1e-3,
             [theta](Check& ck, std::uint64_t seed, std::uint32_t stream) {
               const SpdMetric m(SpdFamily::LCM, 2, theta, 1.0, 0.0);
               const int segments = 200;
               for (long t = 0; t < 20; ++t) {
                 TrialRng rng(seed, stream, static_cast<std::uint64_t>(t));
                 const SpdMatrix p = SpdMatrix::trusted(rng.spd(2, 2.0));
                 const SpdMatrix q = SpdMatrix::trusted(rng.spd(2, 2.0));
                 const double dist = geodesic_distance(m, p, q);
                 const Matrix xp = to_codomain(m, p);
                 const Matrix xq = to_codomain(m, q);
                 double length = 0.0;
                 for (int k = 0; k < segments; ++k) {
                   const double t0 = static_cast<double>(k) / segments;
                   const double t1 = static_cast<double>(k + 1) / segments;
                   const double tm = 0.5 * (t0 + t1);
                   const SpdMatrix a = from_codomain(m, (1 - t0) * xp + t0 * xq);
                   const SpdMatrix b = from_codomain(m, (1 - t1) * xp + t1 * xq);
                   const SpdMatrix mid = from_codomain(m, (1 - tm) * xp + tm * xq);
                   const Matrix vel_amb = (b.mat() - a.mat()) * segments;
                   const Matrix vel = tangent_from_sym(m, mid, vel_amb);
                   length += std::sqrt(metric_inner_at(m, mid, vel, vel)) / segments;
                 }
                 ck.observe(std::abs(length - dist) / std::max(1e-12, dist), [&] {
                   return "P=" + mat_str(p.mat()) + " Q=" + mat_str(q.mat());
                 });
               }
             });
  }
}

}  // namespace liebn::verify_detail
