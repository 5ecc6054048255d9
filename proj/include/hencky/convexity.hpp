////////////////////////////////////////////////////////////////////////////////
// convexity.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Numerical checks of the convexity claims for the exponentiated Hencky
//  family: Hessian of the invariant representation psi, the scalar lemma
//  suite behind the k >= 1/3 threshold, Steigmann-type monotonicity and
//  convexity checks, rank-one scans, the volumetric threshold and a sampler
//  for the sum-of-squared-logarithms inequality.
//
//  Every check reports through ScanReport; "Holds" means no violation on the
//  declared grid at the declared tolerance, nothing more.
*///////////////////////////////////////////////////////////////////////////////
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hencky/energy.hpp"
#include "hencky/scan.hpp"
#include "hencky/tensor.hpp"

namespace hencky {

// ---------------------------------------------------------------------------
// Hessian of psi in invariant coordinates
// ---------------------------------------------------------------------------

/// Eigenvalues (l1 > l2) for the Hessian formulas; throws near gamma2.
inline std::pair<double, double> separated_eigenvalues(double i1, double i2) {
  const InvariantPoint p = InvariantPoint::planar(i1, i2);
  if (p.region == Region::Outside || !(i1 > 0.0) || !(i2 > 0.0))
    throw Error(ErrorCode::OutsideDomain, "point is outside D(i1,i2)");
  const auto [l1, l2] = invariants_to_eigenvalues(p);
  if (!(l1 - l2 > 1e-8 * (l1 + l2))) throw Error(ErrorCode::TooCloseToGamma2, "l1 - l2 <= 1e-8 (l1 + l2)");
  return {l1, l2};
}

/// D^2_l g - Y_2 D^2_l i_2 with Y = (D_l i)^{-T} D_l g, the matrix sandwiched by
/// the Jacobians in the pushforward. Its (0,0) entry is g k r(L) / l1^2.
inline Mat2 lambda_space_matrix(double l1, double l2, double k) {
  const double L = std::log(l1 / l2);
  const double g = std::exp(0.5 * k * L * L);
  const double g1 = g * k * L / l1;
  const double g2 = -g * k * L / l2;
  const double g11 = g * k / (l1 * l1) * (k * L * L - L + 1.0);
  const double g22 = g * k / (l2 * l2) * (k * L * L + L + 1.0);
  const double g12 = -g * k / (l1 * l2) * (k * L * L + 1.0);
  const double y2 = (g2 - g1) / (l1 - l2);
  Mat2 m;
  m << g11, g12 - y2,
       g12 - y2, g22;
  return m;
}

/// D^2 psi = (D_l i)^{-T} M (D_l i)^{-1} with D_l i = [[1, 1], [l2, l1]].
inline Sym2 hessian_psi(double i1, double i2, double k) {
  const auto [l1, l2] = separated_eigenvalues(i1, i2);
  Mat2 jinv_t;
  jinv_t << l1, -l2,
            -1.0, 1.0;
  jinv_t /= (l1 - l2);
  return Sym2(jinv_t * lambda_space_matrix(l1, l2, k) * jinv_t.transpose());
}

struct BracketValue {
  double value = 0.0;
  double scale = 0.0;  // sum of absolute values of the summands
};

/// 2 i2 L + k i1 R L^2 + i1 R - i1^2 L with L = log((i1+R)/(i1-R)); the factor
/// deciding the sign of det D^2 psi. Divided by i1^2 it depends on z = R/i1 only.
inline BracketValue det_hessian_bracket(double i1, double i2, double k) {
  const InvariantPoint p = InvariantPoint::planar(i1, i2);
  if (p.region == Region::Outside || !(i1 > 0.0) || !(i2 > 0.0))
    throw Error(ErrorCode::OutsideDomain, "point is outside D(i1,i2)");
  const double r = std::sqrt(std::max(p.discriminant(), 0.0));
  const double L = 2.0 * std::atanh(r / i1);
  const double t1 = 2.0 * i2 * L, t2 = k * i1 * r * L * L, t3 = i1 * r, t4 = -i1 * i1 * L;
  return {t1 + t2 + t3 + t4, std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4)};
}

/// Closed-form det D^2 psi = 2 k^2 L e^{k L^2} [bracket] / (R^4 i2^2).
inline double det_hessian_sign(double i1, double i2, double k) {
  separated_eigenvalues(i1, i2);
  const double r2 = i1 * i1 - 4.0 * i2;
  const double L = 2.0 * std::atanh(std::sqrt(r2) / i1);
  const BracketValue b = det_hessian_bracket(i1, i2, k);
  return 2.0 * k * k * L * std::exp(k * L * L) * b.value / (r2 * r2 * i2 * i2);
}

/// Closed-form d^2 psi / d i1^2 = 2 k psi (2 k R L^2 + 2 R - i1 L) / R^3.
inline double d2psi_di1(double i1, double i2, double k) {
  separated_eigenvalues(i1, i2);
  const double r = std::sqrt(i1 * i1 - 4.0 * i2);
  const double L = 2.0 * std::atanh(r / i1);
  return 2.0 * k * psi(i1, i2, k) * (2.0 * k * r * L * L + 2.0 * r - i1 * L) / (r * r * r);
}

/// 200 x 200 grid over i1 (log) and z = R/i1 (ascending from the degenerate end).
inline ScanGrid default_det_hessian_grid() {
  return ScanGrid{{"i1", 0.1, 10.0, 200, Spacing::Log}, {"z", 0.01, 0.99, 200, Spacing::Linear}};
}

/// Sign scan of the determinant bracket, margin = bracket / (sum of |terms|).
inline ScanReport scan_det_hessian(double k, const ScanGrid& grid = default_det_hessian_grid(),
                                   double tolerance = 1e-10) {
  ScanReport rep;
  rep.claim = "det-hessian";
  rep.parameters = {{"k", k}};
  rep.tolerance = tolerance;
  run_grid(rep, grid, [&](const std::vector<double>& p) {
    const double i1 = p[0], z = p[1];
    const double i2 = 0.25 * i1 * i1 * (1.0 - z) * (1.0 + z);
    const BracketValue b = det_hessian_bracket(i1, i2, k);
    return PointResult::of(b.value, normalized(b.value, b.scale), {i1, z});
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Scalar functions of the lemma suite
// ---------------------------------------------------------------------------

inline double scalar_r(double t, double k) {
  if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "r(t) needs t > 0");
  return k * t * t - t + 1.0;
}

inline double scalar_rhat(double t, double k) {
  if (!(t > 0.0)) throw Error(ErrorCode::DomainError, "rhat(t) needs t > 0");
  const double lt = std::log(t);
  return k * (t * t - 1.0) * lt * lt - (t * t + 1.0) * lt + (t * t - 1.0);
}

namespace detail {

// 1/x - coth x, series below 0.05 where the direct form cancels.
inline double inv_minus_coth(double x) {
  if (x < 0.05) {
    const double x2 = x * x;
    return x * (-1.0 / 3.0 + x2 * (1.0 / 45.0 + x2 * (-2.0 / 945.0 + x2 * (1.0 / 4725.0))));
  }
  return 1.0 / x - 1.0 / std::tanh(x);
}

// 1/sinh^2 x - 1/x^2
inline double inv_sinh2_minus_inv2(double x) {
  if (x < 0.05) {
    const double x2 = x * x;
    return -1.0 / 3.0 + x2 * (1.0 / 15.0 + x2 * (-2.0 / 189.0 + x2 * (1.0 / 675.0)));
  }
  const double s = std::sinh(x);
  return 1.0 / (s * s) - 1.0 / (x * x);
}

}  // namespace detail

/// t(a) = 1/log a + k log a - (a^2+1)/(a^2-1) written in xi = log a.
inline BracketValue scalar_t_of_xi(double xi, double k) {
  if (!(xi > 0.0)) throw Error(ErrorCode::DomainError, "t(a) needs a > 1");
  const double a = detail::inv_minus_coth(xi), b = k * xi;
  return {a + b, std::abs(a) + std::abs(b)};
}

/// b(a) = k - 1/log^2 a + 4 a^2 / (a^2-1)^2 written in xi = log a.
inline BracketValue scalar_b_of_xi(double xi, double k) {
  if (!(xi > 0.0)) throw Error(ErrorCode::DomainError, "b(a) needs a > 1");
  const double a = detail::inv_sinh2_minus_inv2(xi);
  return {k + a, std::abs(k) + std::abs(a)};
}

inline double scalar_t_of_a(double a, double k) {
  if (!(a > 1.0)) throw Error(ErrorCode::DomainError, "t(a) needs a > 1");
  return scalar_t_of_xi(std::log1p(a - 1.0), k).value;
}

inline double scalar_b_of_a(double a, double k) {
  if (!(a > 1.0)) throw Error(ErrorCode::DomainError, "b(a) needs a > 1");
  return scalar_b_of_xi(std::log1p(a - 1.0), k).value;
}

// ---------------------------------------------------------------------------
// Lemma suite
// ---------------------------------------------------------------------------

struct LemmaGrids {
  Axis xi{"xi", 1e-3, 10.0, 10000, Spacing::Log};
  Axis i1{"i1", 0.1, 10.0, 100, Spacing::Log};
  Axis z{"z", 1e-3, 0.999, 100, Spacing::Log};
  Axis z_only{"z", 1e-3, 0.999, 10000, Spacing::Log};
  double tolerance = 1e-10;
};

/// k >= 1/3 lemmas: b_nonnegative, t_nonnegative, mixed_bracket, det_bracket; k >= 1/8 lemmas:
/// z_bracket, d2psi_di1_bracket; psi_monotone_i1 holds for every k > 0.
inline bool lemma_needs_one_third(const std::string& claim) {
  return claim == "b_nonnegative" || claim == "t_nonnegative" || claim == "mixed_bracket" || claim == "det_bracket";
}

inline std::vector<ScanReport> verify_scalar_lemmas(double k, const LemmaGrids& g = {}) {
  std::vector<ScanReport> out;
  auto fresh = [&](const char* claim) {
    ScanReport r;
    r.claim = claim;
    r.parameters = {{"k", k}};
    r.tolerance = g.tolerance;
    return r;
  };
  const ScanGrid plane{g.i1, g.z};

  // psi grows along i1 at fixed i2: forward difference relative to psi
  {
    ScanReport r = fresh("psi_monotone_i1");
    run_grid(r, plane, [&](const std::vector<double>& p) {
      const double i1 = p[0], z = p[1];
      const double i2 = 0.25 * i1 * i1 * (1.0 - z) * (1.0 + z);
      const double v0 = psi(i1, i2, k);
      const double v1 = psi(i1 * (1.0 + 1e-6), i2, k);
      return PointResult::of(v1 - v0, normalized(v1 - v0, v0), {});
    });
    out.push_back(std::move(r));
  }
  {
    ScanReport r = fresh("b_nonnegative");
    run_grid(r, ScanGrid{g.xi}, [&](const std::vector<double>& p) {
      const BracketValue b = scalar_b_of_xi(p[0], k);
      return PointResult::of(b.value, normalized(b.value, b.scale), {std::exp(p[0])});
    });
    r.coordinates = {"a"};
    out.push_back(std::move(r));
  }
  {
    ScanReport r = fresh("t_nonnegative");
    run_grid(r, ScanGrid{g.xi}, [&](const std::vector<double>& p) {
      const BracketValue t = scalar_t_of_xi(p[0], k);
      return PointResult::of(t.value, normalized(t.value, t.scale), {std::exp(p[0])});
    });
    r.coordinates = {"a"};
    out.push_back(std::move(r));
  }
  {
    ScanReport r = fresh("mixed_bracket");
    run_grid(r, plane, [&](const std::vector<double>& p) {
      const double i1 = p[0], rr = p[1] * i1;
      const double L = 2.0 * std::atanh(p[1]);
      const double a = -(i1 * i1 + rr * rr) * L, b = 2.0 * i1 * rr * (1.0 + k * L * L);
      return PointResult::of(a + b, normalized(a + b, std::abs(a) + std::abs(b)), {});
    });
    out.push_back(std::move(r));
  }
  {
    ScanReport r = fresh("det_bracket");
    run_grid(r, plane, [&](const std::vector<double>& p) {
      const double i1 = p[0], z = p[1];
      const double i2 = 0.25 * i1 * i1 * (1.0 - z) * (1.0 + z);
      const BracketValue b = det_hessian_bracket(i1, i2, k);
      return PointResult::of(b.value, normalized(b.value, b.scale), {});
    });
    out.push_back(std::move(r));
  }
  {
    ScanReport r = fresh("z_bracket");
    run_grid(r, ScanGrid{g.z_only}, [&](const std::vector<double>& p) {
      const double z = p[0], L = 2.0 * std::atanh(z);
      const double a = 2.0 * k * z * L * L, b = 2.0 * z - L;
      return PointResult::of(a + b, normalized(a + b, std::abs(a) + std::abs(2.0 * z) + std::abs(L)), {});
    });
    out.push_back(std::move(r));
  }
  {
    ScanReport r = fresh("d2psi_di1_bracket");
    run_grid(r, plane, [&](const std::vector<double>& p) {
      const double i1 = p[0], rr = p[1] * i1, L = 2.0 * std::atanh(p[1]);
      const double a = 2.0 * k * rr * L * L, b = 2.0 * rr, c = -i1 * L;
      return PointResult::of(a + b + c, normalized(a + b + c, std::abs(a) + std::abs(b) + std::abs(c)), {});
    });
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Steigmann-type checks
// ---------------------------------------------------------------------------

using InvariantFn2 = std::function<double(double, double)>;
using InvariantFn3 = std::function<double(double, double, double)>;

/// Polyconvex in F yet with an indefinite Hessian in (i1, i2).
inline double fixture_planar(double i1, double i2) { return i1 * i1 * i1 * i1 - 4.0 * i1 * i1 * i2 + 2.0 * i2 * i2; }

/// |Cof U|^2 = i2^2 - 2 i1 i3: convex in Cof U, not convex in (i1, i2, i3).
inline double fixture_cof(double i1, double i2, double i3) { return i2 * i2 - 2.0 * i1 * i3; }

struct SteigmannOptions {
  double monotone_tolerance = 1e-10;
  double hessian_tolerance = 1e-8;
  std::size_t midpoint_pairs = 0;  // 0 -> one pair per grid point
  std::uint64_t seed = 1;
  // stencil points must satisfy this for the Hessian part (default: inside D)
  std::function<bool(double, double)> hessian_domain = [](double i1, double i2) {
    return InvariantPoint::classify(i1, i2) == Region::InteriorD;
  };
};

struct SteigmannReports {
  ScanReport monotone;
  ScanReport convex;
};

namespace detail {

inline double fd_eps_floor(double fmax, double inv_h2_sum) {
  return 4.0 * std::numeric_limits<double>::epsilon() * fmax * inv_h2_sum;
}

inline double sample_axis(const Axis& a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s = u(rng);
  if (a.spacing == Spacing::Log) return std::exp(std::log(a.lo) + s * (std::log(a.hi) - std::log(a.lo)));
  return a.lo + s * (a.hi - a.lo);
}

}  // namespace detail

/// Report 1: d psi / d i1 >= 0 (central difference, step 1e-6 i1, increment
/// measured relative to |psi|). Report 2: finite-difference Hessian PSD where
/// the stencil stays in the Hessian domain, plus midpoint convexity
/// psi(mid) <= (psi(p) + psi(q)) / 2 on random pairs across the whole box.
/// A Hessian eigenvalue only counts as negative beyond both 1e-8 max(1, |H|,
/// |psi|) and the rounding floor of the stencil.
inline SteigmannReports steigmann_check_2d(const InvariantFn2& fn, const ScanGrid& grid,
                                           const SteigmannOptions& opt = {}) {
  if (grid.axes.size() != 2) throw Error(ErrorCode::InvalidGrid, "planar check needs an (i1, i2) grid");
  SteigmannReports out;
  out.monotone.claim = "steigmann:monotone";
  out.monotone.tolerance = opt.monotone_tolerance;
  run_grid(out.monotone, grid, [&](const std::vector<double>& p) {
    const double h = 1e-6 * p[0];
    const double f0 = fn(p[0], p[1]);
    const double inc = fn(p[0] + h, p[1]) - fn(p[0] - h, p[1]);
    return PointResult::of(inc / (2.0 * h), normalized(inc, std::max(1.0, std::abs(f0))), {});
  });

  ScanReport& cv = out.convex;
  cv.claim = "steigmann:convex";
  cv.tolerance = opt.hessian_tolerance;
  cv.grid_spec = grid.spec();
  cv.coordinates = {"i1", "i2", "q_i1", "q_i2"};
  const std::size_t n = grid.total();
  const std::size_t pairs = opt.midpoint_pairs ? opt.midpoint_pairs : n;
  cv.grid_spec += " midpoint_pairs=" + std::to_string(pairs) + " seed=" + std::to_string(opt.seed);
  run_indexed(cv, n + pairs, [&](std::size_t idx) {
    if (idx < n) {
      const std::vector<double> p = grid.point(idx);
      const double x = p[0], y = p[1], h1 = 1e-4 * x, h2 = 1e-4 * y;
      for (double dx : {-h1, 0.0, h1})
        for (double dy : {-h2, 0.0, h2})
          if (!opt.hessian_domain(x + dx, y + dy)) return PointResult::skipped();
      const double f = fn(x, y);
      const double fpp = fn(x + h1, y + h2), fpm = fn(x + h1, y - h2), fmp = fn(x - h1, y + h2),
                   fmm = fn(x - h1, y - h2);
      const double fxp = fn(x + h1, y), fxm = fn(x - h1, y), fyp = fn(x, y + h2), fym = fn(x, y - h2);
      Mat2 hm;
      hm(0, 0) = (fxp - 2.0 * f + fxm) / (h1 * h1);
      hm(1, 1) = (fyp - 2.0 * f + fym) / (h2 * h2);
      hm(0, 1) = hm(1, 0) = (fpp - fpm - fmp + fmm) / (4.0 * h1 * h2);
      const double lmin = eigen_sym(Sym2(hm)).values(1);
      const double fmax = std::max({std::abs(f), std::abs(fpp), std::abs(fpm), std::abs(fmp), std::abs(fmm),
                                    std::abs(fxp), std::abs(fxm), std::abs(fyp), std::abs(fym)});
      const double floor = detail::fd_eps_floor(fmax, 1.0 / (h1 * h1) + 1.0 / (h2 * h2) + 1.0 / (h1 * h2));
      const double scale = std::max({1.0, hm.norm(), std::abs(f), floor / opt.hessian_tolerance});
      return PointResult::of(lmin, normalized(lmin, scale), {x, y});
    }
    std::mt19937_64 rng(point_seed(opt.seed, idx - n));
    const double a1 = detail::sample_axis(grid.axes[0], rng), a2 = detail::sample_axis(grid.axes[1], rng);
    const double b1 = detail::sample_axis(grid.axes[0], rng), b2 = detail::sample_axis(grid.axes[1], rng);
    const double fa = fn(a1, a2), fb = fn(b1, b2), fm = fn(0.5 * (a1 + b1), 0.5 * (a2 + b2));
    const double gap = 0.5 * (fa + fb) - fm;
    return PointResult::of(gap, normalized(gap, std::max({1.0, std::abs(fa), std::abs(fb)})), {a1, a2, b1, b2});
  });
  return out;
}

/// Three-invariant version on an (i1, i2, i3) grid; no domain restriction.
inline SteigmannReports steigmann_check_3d(const InvariantFn3& fn, const ScanGrid& grid,
                                           const SteigmannOptions& opt = {}) {
  if (grid.axes.size() != 3) throw Error(ErrorCode::InvalidGrid, "3D check needs an (i1, i2, i3) grid");
  SteigmannReports out;
  out.monotone.claim = "steigmann3:monotone";
  out.monotone.tolerance = opt.monotone_tolerance;
  run_grid(out.monotone, grid, [&](const std::vector<double>& p) {
    const double h = 1e-6 * std::max(1.0, std::abs(p[0]));
    const double f0 = fn(p[0], p[1], p[2]);
    const double inc = fn(p[0] + h, p[1], p[2]) - fn(p[0] - h, p[1], p[2]);
    return PointResult::of(inc / (2.0 * h), normalized(inc, std::max(1.0, std::abs(f0))), {});
  });

  out.convex.claim = "steigmann3:convex";
  out.convex.tolerance = opt.hessian_tolerance;
  run_grid(out.convex, grid, [&](const std::vector<double>& p) {
    Vec3 x(p[0], p[1], p[2]), h;
    for (int i = 0; i < 3; ++i) h(i) = 1e-4 * std::max(1.0, std::abs(x(i)));
    auto f = [&](const Vec3& y) { return fn(y(0), y(1), y(2)); };
    const double f0 = f(x);
    double fmax = std::abs(f0);
    Mat3 hm;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        const Vec3 ei = h(i) * Vec3::Unit(i), ej = h(j) * Vec3::Unit(j);
        double v;
        if (i == j) {
          const double a = f(x + ei), b = f(x - ei);
          fmax = std::max({fmax, std::abs(a), std::abs(b)});
          v = (a - 2.0 * f0 + b) / (h(i) * h(i));
        } else {
          const double a = f(x + ei + ej), b = f(x + ei - ej), c = f(x - ei + ej), d = f(x - ei - ej);
          fmax = std::max({fmax, std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
          v = (a - b - c + d) / (4.0 * h(i) * h(j));
        }
        hm(i, j) = hm(j, i) = v;
      }
    }
    const double lmin = eigen_sym(Sym3(hm)).values(2);
    const double floor = detail::fd_eps_floor(fmax, 3.0 / (h.minCoeff() * h.minCoeff()));
    const double scale = std::max({1.0, hm.norm(), std::abs(f0), floor / opt.hessian_tolerance});
    return PointResult::of(lmin, normalized(lmin, scale), {});
  });
  return out;
}

// ---------------------------------------------------------------------------
// Rank-one convexity
// ---------------------------------------------------------------------------

template <int Dim>
struct RankOneSample {
  Mat<Dim> f;
  Vec<Dim> xi;
  Vec<Dim> eta;
};

template <int Dim>
struct RankOneWitness {
  Mat<Dim> f;
  Vec<Dim> xi;
  Vec<Dim> eta;
  double second_derivative = 0.0;
  std::size_t sample = 0;
};

template <int Dim>
struct RankOneResult {
  ScanReport report;
  std::optional<RankOneWitness<Dim>> witness;
};

/// F = R1 diag(l) R2 with l log-uniform in [lo, hi]; random unit xi, eta.
template <int Dim>
struct StretchSampler {
  double lo = 0.05;
  double hi = 20.0;

  RankOneSample<Dim> operator()(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> ul(std::log(lo), std::log(hi));
    Vec<Dim> l;
    for (int i = 0; i < Dim; ++i) l(i) = std::exp(ul(rng));
    const Mat<Dim> f = random_rotation<Dim>(rng) * l.asDiagonal() * random_rotation<Dim>(rng);
    const Vec<Dim> xi = random_unit_vector<Dim>(rng);
    const Vec<Dim> eta = random_unit_vector<Dim>(rng);
    return {f, xi, eta};
  }
};

/// 3D large-strain sampler: half the samples put |dev log U| uniform in
/// [2, 10], the other half log-uniform in [0.05, 2]; tr log U in [-1, 1].
struct BiasedDevSampler3 {
  RankOneSample<3> operator()(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec3 dir = random_unit_vector<3>(rng);
    Vec3 dev = dir.array() - dir.mean();
    if (dev.norm() < 1e-8) dev = Vec3(1.0, -1.0, 0.0);
    dev.normalize();
    const double mag = u(rng) < 0.5 ? 2.0 + 8.0 * u(rng) : std::exp(std::log(0.05) + u(rng) * std::log(40.0));
    const double tr = -1.0 + 2.0 * u(rng);
    const Vec3 logs = mag * dev + Vec3::Constant(tr / 3.0);
    const Mat3 f = random_rotation<3>(rng) * Vec3(logs.array().exp()).asDiagonal() * random_rotation<3>(rng);
    const Vec3 xi = random_unit_vector<3>(rng);
    const Vec3 eta = random_unit_vector<3>(rng);
    return {f, xi, eta};
  }
};

/// d^2/dt^2 W(F + t xi eta^T) at 0 by central differences with step
/// 1e-4 (1 + |F|). A sample is a violation when the estimate is below
/// -tol |W(F)| / (1 + |F|)^2; samples whose stencil leaves GL+ (or hits
/// overflow) are skipped and counted.
template <int Dim, class EnergyFn, class Sampler>
RankOneResult<Dim> rank_one_scan(const std::string& claim, EnergyFn&& energy, const Sampler& sampler,
                                 std::size_t samples, std::uint64_t seed, double tol = 1e-6) {
  RankOneResult<Dim> out;
  ScanReport& rep = out.report;
  rep.claim = claim;
  rep.tolerance = tol;
  rep.grid_spec = "samples=" + std::to_string(samples) + " seed=" + std::to_string(seed);
  rep.coordinates = {"sample", "dev_log_norm", "det"};
  auto second = [&](const RankOneSample<Dim>& s, double& w0) -> std::optional<double> {
    const double h = 1e-4 * (1.0 + s.f.norm());
    const Mat<Dim> a = s.xi * s.eta.transpose();
    const Mat<Dim> fp = s.f + h * a, fm = s.f - h * a;
    if (!(fp.determinant() > 0.0) || !(fm.determinant() > 0.0) || !(s.f.determinant() > 0.0)) return std::nullopt;
    w0 = energy(s.f);
    const double wp = energy(fp), wm = energy(fm);
    if (!std::isfinite(w0) || !std::isfinite(wp) || !std::isfinite(wm)) return std::nullopt;
    return (wp - 2.0 * w0 + wm) / (h * h);
  };
  run_indexed(rep, samples, [&](std::size_t i) {
    std::mt19937_64 rng(point_seed(seed, i));
    const RankOneSample<Dim> s = sampler(rng);
    double w0 = 0.0;
    const auto d2 = second(s, w0);
    if (!d2) return PointResult::skipped();
    const double fn = 1.0 + s.f.norm();
    const double scale = std::max(std::abs(w0), 1e-300) / (fn * fn);
    const auto ls = log_strain<Dim>(s.f);
    return PointResult::of(*d2, normalized(*d2, scale),
                           {static_cast<double>(i), ls ? std::sqrt(ls->dev_sq) : 0.0, s.f.determinant()});
  });
  if (const Violation* v = rep.witness()) {
    const auto i = static_cast<std::size_t>(v->point[0]);
    std::mt19937_64 rng(point_seed(seed, i));
    const RankOneSample<Dim> s = sampler(rng);
    out.witness = RankOneWitness<Dim>{s.f, s.xi, s.eta, v->value, i};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Volumetric convexity
// ---------------------------------------------------------------------------

/// t^2 f''(t) / f(t) for f(t) = exp(khat (log t)^m), by a central second
/// difference with step 1e-4 t written without cancellation:
/// Delta^2 f = f(t) [expm1(a+) + expm1(a-)], a+- = khat ((log(t +- h))^m - (log t)^m).
inline double volumetric_second_difference(double t, double khat, int m, double rel_h = 1e-4) {
  const double L = std::log(t);
  auto power_difference = [&](double d) {
    // (L + d)^m - L^m = d * sum_i (L + d)^(m-1-i) L^i
    const double x = L + d;
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += int_pow(x, m - 1 - i) * int_pow(L, i);
    return d * s;
  };
  const double ap = khat * power_difference(std::log1p(rel_h));
  const double am = khat * power_difference(std::log1p(-rel_h));
  return (std::expm1(ap) + std::expm1(am)) / (rel_h * rel_h);
}

inline ScanGrid default_volumetric_grid() { return ScanGrid{{"t", 1e-3, 1e3, 10000, Spacing::Log}}; }

/// A second difference is a positive average of f'' over the stencil, so
/// discretization cannot manufacture a violation where f'' >= 0.
inline ScanReport volumetric_convexity_check(double khat, int m, const ScanGrid& grid = default_volumetric_grid(),
                                             double tolerance = 1e-10) {
  if (!(khat > 0.0) || m < 1) throw Error(ErrorCode::InvalidParams, "need khat > 0 and m >= 1");
  ScanReport rep;
  rep.claim = "volumetric-convexity";
  rep.parameters = {{"khat", khat}, {"m", static_cast<double>(m)}};
  rep.tolerance = tolerance;
  run_grid(rep, grid, [&](const std::vector<double>& p) {
    const double v = volumetric_second_difference(p[0], khat, m);
    return PointResult::of(v, v, {});
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Sum of squared logarithms
// ---------------------------------------------------------------------------

namespace detail {

template <class V>
std::vector<double> elementary_symmetric(const V& x) {
  std::vector<double> e(x.size() + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j-- > 0;) e[j + 1] += e[j] * x[i];
  return e;
}

inline double poly_eval(const std::vector<double>& e, double x, double* deriv) {
  // prod (x - l_i) = sum_j (-1)^j e_j x^(n-j)
  const std::size_t n = e.size() - 1;
  double p = 0.0, dp = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double c = (j % 2 ? -1.0 : 1.0) * e[j];
    dp = dp * x + p;
    p = p * x + c;
  }
  if (deriv) *deriv = dp;
  return p;
}

inline void newton_refine(const std::vector<double>& e, std::vector<double>& roots) {
  for (double& r : roots) {
    for (int it = 0; it < 3; ++it) {
      double d = 0.0;
      const double p = poly_eval(e, r, &d);
      if (d == 0.0) break;
      const double step = p / d;
      if (!std::isfinite(step) || std::abs(step) > 1e-3 * std::abs(r)) break;
      r -= step;
    }
  }
}

// Real roots of a monic polynomial from its elementary symmetric values;
// empty when some root is complex or not positive.
inline std::vector<double> positive_real_roots(const std::vector<double>& e) {
  const std::size_t n = e.size() - 1;
  std::vector<double> roots;
  if (n == 2) {
    const double disc = e[1] * e[1] - 4.0 * e[2];
    if (disc < 0.0) return {};
    const double r1 = 0.5 * (e[1] + std::sqrt(disc));
    roots = {r1, e[2] / r1};
  } else if (n == 3) {
    const double a = e[1], b = e[2], c = e[3];
    const double p = b - a * a / 3.0;
    const double q = -2.0 * a * a * a / 27.0 + a * b / 3.0 - c;
    const double disc = -(4.0 * p * p * p + 27.0 * q * q);
    if (disc < 0.0 || p >= 0.0) return {};
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double th = std::acos(arg) / 3.0;
    for (int j = 0; j < 3; ++j) roots.push_back(a / 3.0 + m * std::cos(th - 2.0 * std::numbers::pi * j / 3.0));
  } else {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (std::size_t j = 0; j < n; ++j) comp(j, n - 1) = -((n - j) % 2 ? -1.0 : 1.0) * e[n - j];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const std::complex<double> z = es.eigenvalues()(i);
      if (std::abs(z.imag()) > 1e-9 * std::abs(z)) return {};
      roots.push_back(z.real());
    }
  }
  newton_refine(e, roots);
  for (double r : roots)
    if (!(r > 0.0)) return {};
  return roots;
}

}  // namespace detail

struct SsliOutcome {
  std::vector<double> mu;
  std::vector<double> lambda;
  bool constructed = false;
};

inline double sum_log_squares(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += std::log(v) * std::log(v);
  return s;
}

/// Draws mu log-uniform in [e^-3, e^3] and builds lambda with e_j(lambda) <=
/// e_j(mu) for j < n and e_n(lambda) = e_n(mu). The hypotheses are re-checked
/// on the computed roots (relative 1e-12), so the inequality is tested on the
/// tuple actually produced. Up to 100 retries with shrinking perturbations.
inline SsliOutcome ssli_construct(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SsliOutcome out;
  out.mu.resize(n);
  for (double& v : out.mu) v = std::exp(-3.0 + 6.0 * u(rng));
  const std::vector<double> e = detail::elementary_symmetric(out.mu);

  auto hypotheses_hold = [&](const std::vector<double>& lam) {
    const std::vector<double> el = detail::elementary_symmetric(lam);
    for (int j = 1; j < n; ++j)
      if (el[j] > e[j] * (1.0 + 1e-12)) return false;
    return std::abs(el[n] / e[n] - 1.0) <= 1e-12;
  };

  for (int retry = 0; retry < 100; ++retry) {
    std::vector<double> target = e;
    if (n == 2) {
      const double floor = 2.0 * std::sqrt(e[2]);
      target[1] = floor + u(rng) * (e[1] - floor);
    } else {
      const double amp = 0.5 * std::pow(0.9, retry);
      for (int j = 1; j < n; ++j) target[j] = e[j] * (1.0 - amp * u(rng));
    }
    std::vector<double> lam = detail::positive_real_roots(target);
    if (lam.empty() || !hypotheses_hold(lam)) continue;
    out.lambda = std::move(lam);
    out.constructed = true;
    return out;
  }
  return out;
}

/// Sum_i log^2 lambda_i <= sum_i log^2 mu_i + 1e-10 over constructed tuples;
/// failed constructions are counted as skipped.
inline ScanReport ssli_sampler(int n, std::size_t trials, std::uint64_t seed, double slack = 1e-10) {
  if (n < 2 || n > 4) throw Error(ErrorCode::InvalidDimensions, "ssli sampler supports n in {2,3,4}");
  if (trials < 1) throw Error(ErrorCode::InvalidParams, "need at least one trial");
  ScanReport rep;
  rep.claim = "ssli";
  rep.parameters = {{"n", static_cast<double>(n)}};
  rep.tolerance = slack;
  rep.grid_spec = "trials=" + std::to_string(trials) + " seed=" + std::to_string(seed);
  rep.coordinates = {"trial", "sum_log2_mu", "sum_log2_lambda"};
  run_indexed(rep, trials, [&](std::size_t i) {
    std::mt19937_64 rng(point_seed(seed, i));
    const SsliOutcome o = ssli_construct(n, rng);
    if (!o.constructed) return PointResult::skipped();
    const double sm = sum_log_squares(o.mu), sl = sum_log_squares(o.lambda);
    return PointResult::of(sm - sl, sm - sl, {static_cast<double>(i), sm, sl});
  });
  return rep;
}

}  // namespace hencky
