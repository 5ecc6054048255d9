#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "hencky/tensor.hpp"

namespace hencky {

struct MaterialParams {
  double mu = 1.0;
  double kappa = 1.0;
  double k = 1.0 / 3.0;
  double khat = 1.0 / 8.0;
  int m = 2;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidParams, std::string(name) + " must be > 0");
    };
    positive(mu, "mu");
    positive(kappa, "kappa");
    positive(k, "k");
    positive(khat, "khat");
    if (m < 1) throw Error(ErrorCode::InvalidParams, "m must be >= 1");
  }

  /// Energy at the reference state, the global minimum value.
  double ground_energy() const { return mu / k + kappa / (2.0 * khat); }
};

/// Energy sample; +inf (finite == false) on det F <= 0 and also on
/// floating-point overflow of the exponentials at extreme stretch.
struct EnergyValue {
  double value = 0.0;
  bool finite = true;

  static EnergyValue of(double v) { return {v, std::isfinite(v)}; }
  static EnergyValue infinite() { return {std::numeric_limits<double>::infinity(), false}; }
};

enum class EnergyKind { ExpHencky, QuadraticHencky };

/// Log principal stretches (descending) plus the two scalar strain measures the
/// energies depend on.
template <int Dim>
struct LogStrain {
  Vec<Dim> logs;
  double trace = 0.0;   // tr log U = log det F
  double dev_sq = 0.0;  // ||dev_n log U||^2
};

template <int Dim>
LogStrain<Dim> log_strain_from_logs(const Vec<Dim>& logs) {
  LogStrain<Dim> s;
  s.logs = logs;
  s.trace = logs.sum();
  const double mean = s.trace / Dim;
  for (int i = 0; i < Dim; ++i) s.dev_sq += (logs(i) - mean) * (logs(i) - mean);
  return s;
}

/// Empty when det F <= 0.
template <int Dim>
std::optional<LogStrain<Dim>> log_strain(const Mat<Dim>& f) {
  const double det = f.determinant();
  if (!(det > 0.0)) return std::nullopt;
  const EigenData<Dim> eig = eigen_sym(SymMatrix<Dim>(f.transpose() * f));
  if (!(eig.values(Dim - 1) > 0.0)) return std::nullopt;
  Vec<Dim> logs;
  for (int i = 0; i < Dim; ++i) logs(i) = 0.5 * std::log(eig.values(i));
  LogStrain<Dim> s = log_strain_from_logs<Dim>(logs);
  // log det F is more accurate than the sum of logs for nearly singular C
  s.trace = std::log(det);
  return s;
}

inline double int_pow(double x, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= x;
  return r;
}

template <int Dim>
double iso_value(const LogStrain<Dim>& s, const MaterialParams& p) {
  return p.mu / p.k * std::exp(p.k * s.dev_sq);
}

template <int Dim>
double vol_value(const LogStrain<Dim>& s, const MaterialParams& p) {
  return p.kappa / (2.0 * p.khat) * std::exp(p.khat * int_pow(s.trace, p.m));
}

template <int Dim>
EnergyValue energy_iso(const Mat<Dim>& f, const MaterialParams& p) {
  const auto s = log_strain<Dim>(f);
  if (!s) return EnergyValue::infinite();
  return EnergyValue::of(iso_value(*s, p));
}

template <int Dim>
EnergyValue energy_vol(const Mat<Dim>& f, const MaterialParams& p) {
  const auto s = log_strain<Dim>(f);
  if (!s) return EnergyValue::infinite();
  return EnergyValue::of(vol_value(*s, p));
}

template <int Dim>
EnergyValue energy_eH(const Mat<Dim>& f, const MaterialParams& p) {
  const auto s = log_strain<Dim>(f);
  if (!s) return EnergyValue::infinite();
  return EnergyValue::of(iso_value(*s, p) + vol_value(*s, p));
}

/// Energy of a stretch tensor given by its eigenvalues (all > 0).
template <int Dim>
EnergyValue energy_eH_stretches(const Vec<Dim>& stretches, const MaterialParams& p) {
  Vec<Dim> logs;
  for (int i = 0; i < Dim; ++i) {
    if (!(stretches(i) > 0.0)) return EnergyValue::infinite();
    logs(i) = std::log(stretches(i));
  }
  const LogStrain<Dim> s = log_strain_from_logs<Dim>(logs);
  return EnergyValue::of(iso_value(s, p) + vol_value(s, p));
}

template <int Dim>
EnergyValue energy_quadratic_hencky(const Mat<Dim>& f, const MaterialParams& p) {
  const auto s = log_strain<Dim>(f);
  if (!s) return EnergyValue::infinite();
  return EnergyValue::of(p.mu * s->dev_sq + 0.5 * p.kappa * s->trace * s->trace);
}

template <int Dim>
EnergyValue energy_of(EnergyKind kind, const Mat<Dim>& f, const MaterialParams& p) {
  return kind == EnergyKind::ExpHencky ? energy_eH<Dim>(f, p) : energy_quadratic_hencky<Dim>(f, p);
}

/// exp((k/2) log^2(l1/l2)), the unscaled planar isochoric factor.
inline double g_iso(double l1, double l2, double k) {
  if (!(l1 > 0.0) || !(l2 > 0.0)) throw Error(ErrorCode::DomainError, "g_iso needs positive stretches");
  const double r = std::log(l1 / l2);
  return std::exp(0.5 * k * r * r);
}

/// The isochoric factor in invariant coordinates. With z = R/i1 the log ratio
/// log((i1+R)/(i1-R)) equals 2 atanh(z), which stays accurate as R -> 0.
/// On gamma2 (within tolerance) the value is exactly 1.
inline double psi(double i1, double i2, double k) {
  const InvariantPoint pt = InvariantPoint::planar(i1, i2);
  if (pt.region == Region::Outside || !(i1 > 0.0) || !(i2 > 0.0))
    throw Error(ErrorCode::OutsideDomain, "psi needs i1^2 > 4 i2 with positive invariants");
  if (pt.region == Region::OnGamma2) return 1.0;
  const double root = std::sqrt(pt.discriminant());
  const double z = root / i1;
  double log_ratio;
  if (z < 0.5) {
    log_ratio = 2.0 * std::atanh(z);
  } else {
    // atanh is ill-conditioned as z -> 1; go through l1 and l2 = i2 / l1
    const double l1 = 0.5 * (i1 + root);
    log_ratio = std::log(l1 * l1 / i2);
  }
  return std::exp(0.5 * k * log_ratio * log_ratio);
}

/// Convex extension: psi on D and gamma2, 1 elsewhere in the quadrant.
inline double psi_hat(double i1, double i2, double k) {
  if (i1 < 0.0 || !(i2 > 0.0)) throw Error(ErrorCode::OutsideDomain, "psi_hat needs i1 >= 0, i2 > 0");
  if (InvariantPoint::classify(i1, i2) != Region::InteriorD) return 1.0;
  return psi(i1, i2, k);
}

/// First Piola-Kirchhoff stress of the planar energy with m = 2:
/// S1 = F^{-T} [2 mu e^{k |dev log U|^2} dev log U + kappa e^{khat tr^2} tr 1].
template <int Dim>
Mat<Dim> piola_stress(const Mat<Dim>& f, const MaterialParams& p) {
  static_assert(Dim == 2, "closed-form stress is planar; use finite differences in 3D");
  if (p.m != 2) throw Error(ErrorCode::InvalidParams, "closed-form stress requires m = 2");
  const double det = f.determinant();
  if (!(det > 0.0)) throw Error(ErrorCode::NonPositiveDeterminant, "det F <= 0");
  const EigenData<Dim> eig = eigen_sym(SymMatrix<Dim>(f.transpose() * f));
  if (!(eig.values(Dim - 1) > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "F^T F lost definiteness");

  Vec<Dim> logs;
  for (int i = 0; i < Dim; ++i) logs(i) = 0.5 * std::log(eig.values(i));
  const double tr = std::log(det);
  const double mean = logs.sum() / Dim;
  Vec<Dim> dev = logs.array() - mean;
  const double dev_sq = dev.squaredNorm();

  const double a = 2.0 * p.mu * std::exp(p.k * dev_sq);
  const double b = p.kappa * std::exp(p.khat * tr * tr) * tr;
  Vec<Dim> diag = a * dev;
  diag.array() += b;
  const Mat<Dim> t = eig.vectors * diag.asDiagonal() * eig.vectors.transpose();
  return f.inverse().transpose() * t;
}

/// dim^4 array of second derivatives, index (i,j,k,l) -> d2W / dF_ij dF_kl.
template <int Dim>
struct Tangent {
  static constexpr int kSize = Dim * Dim * Dim * Dim;
  std::array<double, kSize> data{};

  static constexpr int index(int i, int j, int k, int l) { return ((i * Dim + j) * Dim + k) * Dim + l; }
  double& operator()(int i, int j, int k, int l) { return data[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data[index(i, j, k, l)]; }

  /// sum_ijkl A_ijkl (xi eta^T)_ij (xi eta^T)_kl
  double rank_one(const Vec<Dim>& xi, const Vec<Dim>& eta) const {
    double s = 0.0;
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j)
        for (int k = 0; k < Dim; ++k)
          for (int l = 0; l < Dim; ++l) s += (*this)(i, j, k, l) * xi(i) * eta(j) * xi(k) * eta(l);
    return s;
  }
};

inline double default_tangent_step(double fnorm) { return 1e-4 * (1.0 + fnorm); }

/// Central-difference Hessian of an arbitrary energy callable (Mat -> double).
/// The four-point stencil is symmetric in (a,b), so major symmetry is exact.
template <int Dim, class EnergyFn>
Tangent<Dim> tangent_fd_of(EnergyFn&& energy, const Mat<Dim>& f, double h) {
  constexpr int n2 = Dim * Dim;
  auto eval = [&](const Mat<Dim>& g) {
    if (!(g.determinant() > 0.0)) throw Error(ErrorCode::NonPositiveDeterminant, "tangent stencil left GL+");
    const double w = energy(g);
    if (!std::isfinite(w)) throw Error(ErrorCode::NonPositiveDeterminant, "tangent stencil hit infinite energy");
    return w;
  };
  auto unit = [](int a) {
    Mat<Dim> e = Mat<Dim>::Zero();
    e(a / Dim, a % Dim) = 1.0;
    return e;
  };
  Tangent<Dim> t;
  for (int a = 0; a < n2; ++a) {
    for (int b = a; b < n2; ++b) {
      const Mat<Dim> ea = h * unit(a), eb = h * unit(b);
      const double v = (eval(f + ea + eb) - eval(f + ea - eb) - eval(f - ea + eb) + eval(f - ea - eb)) / (4.0 * h * h);
      t.data[a * n2 + b] = v;
      t.data[b * n2 + a] = v;
    }
  }
  return t;
}

template <int Dim>
Tangent<Dim> tangent_fd(const Mat<Dim>& f, const MaterialParams& p) {
  return tangent_fd_of<Dim>([&](const Mat<Dim>& g) { return energy_eH<Dim>(g, p).value; }, f,
                            default_tangent_step(f.norm()));
}

}  // namespace hencky
