////////////////////////////////////////////////////////////////////////////////
// coercivity.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Growth estimates for the exponentiated Hencky energy. Constants are built
//  by the recipes of the existence proofs (deliberately not optimized) and then
//  checked on grids or samples; an empirical constant is reported alongside so
//  the looseness of the recipe is visible.
//
//  Inequalities are compared in log space where the exponentials would
//  overflow; a slack is (lhs - rhs) / lhs, so 1 means rhs <= 0.
*///////////////////////////////////////////////////////////////////////////////
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hencky/energy.hpp"
#include "hencky/scan.hpp"
#include "hencky/tensor.hpp"

namespace hencky {

struct CoercivityCertificate {
  std::string claim;
  std::map<std::string, double> parameters;
  double k1 = 0.0;
  double k2 = 0.0;
  double empirical_k1 = 0.0;  // best K1 for the same K2 on the same points
  ScanReport report;          // margin = slack

  double min_slack() const { return report.min_margin; }
  bool holds() const { return report.verdict == Verdict::Holds; }
};

namespace detail {

// log(e^a + e^b)
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// (lhs - rhs) / lhs from log lhs and rhs = k1 * exp(log_base) - k2
inline double relative_slack(double log_lhs, double k1, double log_base, double k2) {
  if (k1 <= 0.0 || log_base == -std::numeric_limits<double>::infinity()) return 1.0;
  const double log_pos = std::log(k1) + log_base;
  // rhs <= 0 exactly when k1 base <= k2
  if (k2 > 0.0 && log_pos <= std::log(k2)) return 1.0;
  const double log_rhs = k2 > 0.0 ? log_pos + std::log1p(-std::exp(std::log(k2) - log_pos)) : log_pos;
  return -std::expm1(log_rhs - log_lhs);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar estimate e^{beta log^2 t} >= K |t - 1|^{alpha beta}
// ---------------------------------------------------------------------------

/// K = min{e^{-alpha^2/4}, 1}^beta: inf_{s>0} e^{s^2 - alpha s} is attained at
/// s = alpha/2, and the case t < 1 contributes 1.
inline double scalar_coercivity_constant(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(ErrorCode::InvalidParams, "need alpha, beta > 0");
  // e^{-alpha^2/4} <= 1 always; exponentiate once so large alpha does not underflow
  return std::exp(-0.25 * beta * alpha * alpha);
}

inline ScanGrid default_scalar_coercivity_grid() { return ScanGrid{{"t", 1e-6, 1e6, 10000, Spacing::Log}}; }

inline CoercivityCertificate verify_scalar_coercivity(double alpha, double beta,
                                                      const ScanGrid& grid = default_scalar_coercivity_grid()) {
  CoercivityCertificate c;
  c.claim = "coercivity:scalar";
  c.parameters = {{"alpha", alpha}, {"beta", beta}};
  c.k1 = scalar_coercivity_constant(alpha, beta);
  c.k2 = 0.0;
  const double g = alpha * beta;
  ScanReport& rep = c.report;
  rep.claim = c.claim;
  rep.parameters = c.parameters;
  rep.tolerance = 0.0;
  double best = std::numeric_limits<double>::infinity();
  run_grid(rep, grid, [&](const std::vector<double>& p) {
    const double lt = std::log(p[0]);
    const double log_lhs = beta * lt * lt;
    const double log_base = g * std::log(std::abs(p[0] - 1.0));
    const double s = detail::relative_slack(log_lhs, c.k1, log_base, 0.0);
    return PointResult::of(log_lhs - log_base, s, {});
  });
  for (std::size_t i = 0; i < grid.total(); ++i) {
    const double t = grid.point(i)[0];
    if (t == 1.0) continue;
    const double lt = std::log(t);
    best = std::min(best, beta * lt * lt - g * std::log(std::abs(t - 1.0)));
  }
  c.empirical_k1 = std::exp(best);
  return c;
}

// ---------------------------------------------------------------------------
// Pair estimate e^{beta (log^2 l1 + log^2 l2)} >= K1 ((l1-1)^2 + (l2-1)^2)^{alpha beta / 2} - K2
// ---------------------------------------------------------------------------

/// Constants of sqrt(s+t)^g C - Ktilde <= sqrt(s)^g for t in (0,a), s > 1,
/// from the Taylor expansion up to order m with g - 2m > 0 >= g - 2m - 2.
struct TaylorConstants {
  int m = 0;
  double c = 1.0;
  double ktilde = 0.0;
};

inline TaylorConstants taylor_constants(double a, double gamma) {
  if (!(a > 0.0) || !(gamma > 0.0)) throw Error(ErrorCode::InvalidParams, "need a, gamma > 0");
  TaylorConstants t;
  t.m = static_cast<int>(std::ceil(gamma / 2.0)) - 1;
  while (gamma - 2.0 * t.m <= 0.0) --t.m;
  while (gamma - 2.0 * t.m - 2.0 > 0.0) ++t.m;
  // coefficient of t^j: gamma (gamma-2) ... (gamma-2j+2) / (2^j j!)
  double coeff = 1.0, inv_c = 1.0, aj = 1.0;
  for (int j = 1; j <= t.m; ++j) {
    coeff *= (gamma - 2.0 * (j - 1)) / (2.0 * j);
    aj *= a;
    inv_c += coeff * aj;
  }
  const double rem = coeff * (gamma - 2.0 * t.m) / (2.0 * (t.m + 1)) * aj * a;
  t.c = 1.0 / inv_c;
  t.ktilde = rem * t.c;
  return t;
}

struct PairConstants {
  double k1 = 0.0;
  double k2 = 0.0;
};

/// Case split at 3: both stretches >= 3 use the product inequality with K^2;
/// one stretch >= 3 uses the Taylor lemma with a = 4; (0,3]^2 is absorbed
/// into K2 = K1 sup ((l1-1)^2 + (l2-1)^2)^{g/2} = K1 8^{g/2}.
inline PairConstants pair_coercivity_constants(double alpha, double beta) {
  const double g = alpha * beta;
  const double k = scalar_coercivity_constant(alpha, beta);
  const TaylorConstants t = taylor_constants(4.0, g);
  PairConstants out;
  out.k1 = std::min(k * k, k * t.c);
  out.k2 = std::max({0.0, k * t.ktilde, out.k1 * std::pow(8.0, 0.5 * g)});
  return out;
}

/// Any n: e^{beta sum log^2 l_i} >= max_i e^{beta log^2 l_i} >= K max_i |l_i - 1|^g
/// >= K n^{-g/2} (sum (l_i-1)^2)^{g/2}, so K2 = 0.
inline PairConstants max_coordinate_constants(double alpha, double beta, int n) {
  const double g = alpha * beta;
  return {scalar_coercivity_constant(alpha, beta) * std::pow(static_cast<double>(n), -0.5 * g), 0.0};
}

inline ScanGrid default_pair_grid() {
  return ScanGrid{{"l1", 1e-4, 1e3, 400, Spacing::Log}, {"l2", 1e-4, 1e3, 400, Spacing::Log}};
}

namespace detail {

inline double log_pair_base(double l1, double l2, double g) {
  const double s = (l1 - 1.0) * (l1 - 1.0) + (l2 - 1.0) * (l2 - 1.0);
  return s > 0.0 ? 0.5 * g * std::log(s) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

inline CoercivityCertificate verify_pair_coercivity(double alpha, double beta, const ScanGrid& grid = default_pair_grid()) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(ErrorCode::InvalidParams, "need alpha, beta > 0");
  const PairConstants pc = pair_coercivity_constants(alpha, beta);
  const double g = alpha * beta;
  CoercivityCertificate c;
  c.claim = "coercivity:pair";
  c.parameters = {{"alpha", alpha}, {"beta", beta}};
  c.k1 = pc.k1;
  c.k2 = pc.k2;
  ScanReport& rep = c.report;
  rep.claim = c.claim;
  rep.parameters = c.parameters;
  rep.tolerance = 0.0;
  auto log_lhs = [&](double l1, double l2) {
    const double a = std::log(l1), b = std::log(l2);
    return beta * (a * a + b * b);
  };
  run_grid(rep, grid, [&](const std::vector<double>& p) {
    const double ll = log_lhs(p[0], p[1]), lb = detail::log_pair_base(p[0], p[1], g);
    return PointResult::of(ll - lb, detail::relative_slack(ll, c.k1, lb, c.k2), {});
  });
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.total(); ++i) {
    const auto p = grid.point(i);
    const double lb = detail::log_pair_base(p[0], p[1], g);
    if (lb == -std::numeric_limits<double>::infinity()) continue;
    best = std::min(best, detail::log_add(log_lhs(p[0], p[1]), std::log(std::max(c.k2, 1e-300))) - lb);
  }
  c.empirical_k1 = std::exp(best);
  return c;
}

// ---------------------------------------------------------------------------
// Full energy: W(U) >= K1 |U - 1|^q - K2
// ---------------------------------------------------------------------------

struct FullCoercivityConstants {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double a1 = 0.0, a2 = 0.0;
  double k1 = 0.0, k2 = 0.0;
};

/// alpha1 = 2q/k, alpha2 = 2q/khat. The isochoric bound comes from the pair
/// recipe for n = 2 and the max-coordinate bound for n >= 3. The volumetric
/// bound is taken in s = det U^{1/n} (the quantity the Young step needs):
/// e^{khat (tr log U)^2} = e^{khat n^2 log^2 s} >= e^{khat log^2 s} >= K |s-1|^{2q}.
inline FullCoercivityConstants full_coercivity_constants(const MaterialParams& p, double q, int n) {
  p.validate();
  if (!(q >= 1.0)) throw Error(ErrorCode::InvalidParams, "need q >= 1");
  if (n != 2 && n != 3) throw Error(ErrorCode::InvalidDimensions, "n must be 2 or 3");
  const double alpha1 = 2.0 * q / p.k, alpha2 = 2.0 * q / p.khat;
  const PairConstants dev = n == 2 ? pair_coercivity_constants(alpha1, p.k) : max_coordinate_constants(alpha1, p.k, n);
  const double kv = scalar_coercivity_constant(alpha2, p.khat);
  FullCoercivityConstants f;
  f.c1 = p.mu / p.k * dev.k1;
  f.c2 = p.kappa / (2.0 * p.khat) * kv;
  f.c3 = p.mu / p.k * dev.k2;
  const double nq = std::pow(static_cast<double>(n), q);
  f.a2 = std::pow(2.0, q - 2.0) * nq + std::pow(2.0, 3.0 * q - 3.0);
  f.a1 = std::max(std::pow(2.0, q - 2.0) / f.c1, f.a2 / f.c2);
  f.k1 = 1.0 / f.a1;
  f.k2 = f.c3 + f.a2 / f.a1;
  return f;
}

template <int Dim>
double full_coercivity_slack(const Vec<Dim>& stretches, const MaterialParams& p, double q, double k1, double k2) {
  Vec<Dim> logs = stretches.array().log();
  const LogStrain<Dim> s = log_strain_from_logs<Dim>(logs);
  // log W = log(a e^x + b e^y)
  const double lw = detail::log_add(std::log(p.mu / p.k) + p.k * s.dev_sq,
                                    std::log(p.kappa / (2.0 * p.khat)) + p.khat * int_pow(s.trace, p.m));
  const double dist = (stretches.array() - 1.0).matrix().norm();
  const double lb = dist > 0.0 ? q * std::log(dist) : -std::numeric_limits<double>::infinity();
  return detail::relative_slack(lw, k1, lb, k2);
}

/// Samples SPD U (random rotation, eigenvalues log-uniform in [lo, hi]) and
/// checks W(U) against the constructed certificate; W and |U - 1| are
/// evaluated on the assembled matrix.
template <int Dim>
CoercivityCertificate verify_full_coercivity_dim(const MaterialParams& p, double q, std::size_t samples,
                                                 std::uint64_t seed, double lo, double hi) {
  const FullCoercivityConstants fc = full_coercivity_constants(p, q, Dim);
  CoercivityCertificate c;
  c.claim = "coercivity:full";
  c.parameters = {{"q", q},      {"n", Dim},         {"mu", p.mu},
                  {"kappa", p.kappa}, {"k", p.k}, {"khat", p.khat}};
  c.k1 = fc.k1;
  c.k2 = fc.k2;
  ScanReport& rep = c.report;
  rep.claim = c.claim;
  rep.parameters = c.parameters;
  rep.tolerance = 0.0;
  rep.grid_spec = "samples=" + std::to_string(samples) + " seed=" + std::to_string(seed) + " eig=" +
                  format_number(lo) + ":" + format_number(hi) + ":log";
  rep.coordinates = {"sample", "dist", "log_w"};
  std::vector<double> ratio(samples, std::numeric_limits<double>::infinity());
  run_indexed(rep, samples, [&](std::size_t i) {
    std::mt19937_64 rng(point_seed(seed, i));
    const SymMatrix<Dim> u = random_spd<Dim>(rng, lo, hi);
    const Vec<Dim> lam = eigen_sym(u).values;
    const Vec<Dim> logs = lam.array().log();
    const LogStrain<Dim> s = log_strain_from_logs<Dim>(logs);
    const double lw = detail::log_add(std::log(p.mu / p.k) + p.k * s.dev_sq,
                                      std::log(p.kappa / (2.0 * p.khat)) + p.khat * int_pow(s.trace, p.m));
    const double dist = (u.matrix() - Mat<Dim>::Identity()).norm();
    const double lb = dist > 0.0 ? q * std::log(dist) : -std::numeric_limits<double>::infinity();
    ratio[i] = lb == -std::numeric_limits<double>::infinity() ? ratio[i]
                                                                : detail::log_add(lw, std::log(fc.k2)) - lb;
    return PointResult::of(lw - lb, detail::relative_slack(lw, fc.k1, lb, fc.k2), {static_cast<double>(i), dist, lw});
  });
  c.empirical_k1 = std::exp(*std::min_element(ratio.begin(), ratio.end()));
  return c;
}

inline CoercivityCertificate verify_full_coercivity(const MaterialParams& p, double q, int n, std::size_t samples = 100000,
                                                    std::uint64_t seed = 1, double lo = 1e-3, double hi = 1e3) {
  if (n == 2) return verify_full_coercivity_dim<2>(p, q, samples, seed, lo, hi);
  if (n == 3) return verify_full_coercivity_dim<3>(p, q, samples, seed, lo, hi);
  throw Error(ErrorCode::InvalidDimensions, "n must be 2 or 3");
}

// ---------------------------------------------------------------------------
// Non-coercivity of the isochoric part alone, and no polynomial upper bound
// ---------------------------------------------------------------------------

struct NoncoercivityWitness {
  double n = 0.0;        // max of the two
  double n_equal = 0.0;  // l1 = l2 = N + 1 breaks the |U - 1| bound
  double n_ratio = 0.0;  // l1 = 2N, l2 = N breaks the |dev U| bound
  // direct evaluation at N: lhs and rhs of both bounds
  double lhs1 = 0.0, rhs1 = 0.0, lhs2 = 0.0, rhs2 = 0.0;
};

/// Smallest whole N (found by inverting the power law, then confirmed by
/// direct evaluation) such that both candidate bounds of e^{k |dev_2 log U|^2}
/// are exceeded by a factor target: rhs > target * lhs.
inline NoncoercivityWitness dev_only_noncoercivity_witness(double k, double alpha, double k1, double k2, double target) {
  if (!(k > 0.0) || !(alpha > 0.0) || !(k1 > 0.0)) throw Error(ErrorCode::InvalidParams, "need k, alpha, K1 > 0");
  if (!(target > 0.0) || k2 < 0.0) throw Error(ErrorCode::InvalidParams, "need target > 0 and K2 >= 0");
  const double ak = alpha * k;
  // everything is evaluated on the actual stretch tensors
  auto iso = [&](double l1, double l2) {
    const LogStrain<2> s = log_strain_from_logs<2>(Vec2(std::log(l1), std::log(l2)));
    return std::exp(k * s.dev_sq);
  };
  auto rhs1 = [&](double n) { return k1 * std::pow(Vec2(n, n).norm(), ak) - k2; };
  auto rhs2 = [&](double n) { return k1 * std::pow(deviator(Sym2::diagonal(Vec2(2.0 * n, n))).norm(), ak) - k2; };
  // excess of each bound over target * lhs at the same N
  auto over1 = [&](double n) { return rhs1(n) - target * iso(n + 1.0, n + 1.0); };
  auto over2 = [&](double n) { return rhs2(n) - target * iso(2.0 * n, n); };
  const double lhs1 = 1.0;  // l1 = l2
  const double lhs2 = std::exp(0.5 * k * std::log(2.0) * std::log(2.0));
  // bracket around the analytic guess, then bisect on whole numbers
  auto smallest = [](auto rhs, double bound, double guess) {
    if (!std::isfinite(guess) || guess > 1e300) return std::numeric_limits<double>::infinity();
    double hi = std::max(1.0, std::ceil(guess));
    while (!(rhs(hi) > bound)) {
      hi = std::ceil(2.0 * hi);
      if (!std::isfinite(hi)) return hi;
    }
    double lo = std::max(0.0, std::floor(0.5 * hi));
    while (lo > 0.0 && rhs(lo) > bound) lo = std::floor(0.5 * lo);
    // invariant: rhs(lo) <= bound (or lo = 0), rhs(hi) > bound
    while (hi - lo > 1.0) {
      const double mid = std::floor(0.5 * (lo + hi));
      if (mid <= lo || mid >= hi) break;
      (rhs(mid) > bound ? hi : lo) = mid;
    }
    return hi;
  };
  NoncoercivityWitness w;
  // K1 (2 N^2)^{ak/2} - K2 > target  <=>  N > sqrt(((target + K2)/K1)^{2/ak} / 2)
  w.n_equal = smallest(over1, 0.0, std::sqrt(0.5 * std::pow((target * lhs1 + k2) / k1, 2.0 / ak)));
  w.n_ratio = smallest(over2, 0.0, std::pow((target * lhs2 + k2) / k1 * std::pow(2.0, 0.5 * ak), 1.0 / ak));
  if (!std::isfinite(w.n_equal) || !std::isfinite(w.n_ratio))
    throw Error(ErrorCode::InvalidParams, "witness exceeds double range");
  w.n = std::max(w.n_equal, w.n_ratio);
  w.lhs1 = iso(w.n_equal + 1.0, w.n_equal + 1.0);
  w.rhs1 = rhs1(w.n_equal);
  w.lhs2 = iso(2.0 * w.n_ratio, w.n_ratio);
  w.rhs2 = rhs2(w.n_ratio);
  return w;
}

/// First c on a log grid of [1, c_max] with W(c 1) > C (1 + |c 1|^q), or empty.
inline std::optional<double> polynomial_upper_bound_witness(const MaterialParams& p, int n, double big_c, double q,
                                                            double c_max = 1e6, std::size_t count = 2000) {
  p.validate();
  const Axis axis{"c", 1.0, c_max, count, Spacing::Log};
  axis.validate();
  for (std::size_t i = 0; i < count; ++i) {
    const double c = axis.at(i);
    const double tr = n * std::log(c);
    const double w = p.mu / p.k + p.kappa / (2.0 * p.khat) * std::exp(p.khat * int_pow(tr, p.m));
    if (w > big_c * (1.0 + std::pow(std::sqrt(static_cast<double>(n)) * c, q))) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// q-coercivity of a discrete energy functional
// ---------------------------------------------------------------------------

struct FieldSample {
  double energy = 0.0;   // I(phi) = sum_e |T_e| W(grad phi_e)
  double grad_lq = 0.0;  // |grad phi|_{L^q}
};

struct CoercivityRow {
  double bound = 0.0;        // K
  double radius = 0.0;       // Ktilde(K)
  std::size_t below = 0;     // samples with I <= K
  std::size_t violations = 0;
  double max_norm = 0.0;     // largest |grad phi|_{L^q} among samples with I <= K
};

/// Integrating W >= K1 |U - 1|^q - K2 and Minkowski's inequality give
/// I <= K  ==>  |grad phi|_{L^q} <= ((K + K2 |Omega|)/K1)^{1/q} + sqrt(n) |Omega|^{1/q}.
inline double coercivity_radius(double bound, double q, int n, double area, double k1, double k2) {
  return std::pow(std::max(bound + k2 * area, 0.0) / k1, 1.0 / q) + std::sqrt(static_cast<double>(n)) * std::pow(area, 1.0 / q);
}

inline std::vector<CoercivityRow> q_coercivity_table(double q, const MaterialParams& p, int n, double area,
                                                     const std::vector<FieldSample>& samples,
                                                     const std::vector<double>& bounds) {
  const FullCoercivityConstants fc = full_coercivity_constants(p, q, n);
  std::vector<CoercivityRow> rows;
  for (double b : bounds) {
    CoercivityRow r;
    r.bound = b;
    r.radius = coercivity_radius(b, q, n, area, fc.k1, fc.k2);
    for (const FieldSample& s : samples) {
      if (!(s.energy <= b)) continue;
      ++r.below;
      r.max_norm = std::max(r.max_norm, s.grad_lq);
      if (s.grad_lq > r.radius) ++r.violations;
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hencky
