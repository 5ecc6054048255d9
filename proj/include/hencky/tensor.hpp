////////////////////////////////////////////////////////////////////////////////
// tensor.hpp
////////////////////////////////////////////////////////////////////////////////
/*! @file
//  Small dense tensor kernel for 2x2 and 3x3 matrices: closed-form symmetric
//  eigendecomposition, right stretch tensor, SPD logarithm/exponential,
//  deviators, cofactors and the principal invariants of the stretch tensor.
*///////////////////////////////////////////////////////////////////////////////
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>

#include "hencky/error.hpp"

namespace hencky {

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;
template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

using Mat2 = Mat<2>;
using Mat3 = Mat<3>;
using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

namespace tol {
// Absolute floor used by every relative tolerance.
inline constexpr double kFloor = 1e-14;
// Eigenvalues at or below this are not positive definite.
inline constexpr double kSpd = 1e-14;
// Relative gap below which two eigenvalues are treated as equal.
inline constexpr double kEqualEigen = 1e-12;
// Relative width of the parabola i1^2 = 4 i2 (the curve gamma2).
inline constexpr double kGamma2 = 1e-12;
}  // namespace tol

/// Symmetric matrix; symmetry is exact because the input is symmetrized on
/// construction.
template <int Dim>
class SymMatrix {
  static_assert(Dim == 2 || Dim == 3, "only 2x2 and 3x3 tensors are supported");

 public:
  SymMatrix() : m_(Mat<Dim>::Zero()) {}
  explicit SymMatrix(const Mat<Dim>& a) : m_(0.5 * (a + a.transpose())) {}

  static SymMatrix identity() { return SymMatrix(Mat<Dim>::Identity()); }
  static SymMatrix diagonal(const Vec<Dim>& d) { return SymMatrix(Mat<Dim>(d.asDiagonal())); }

  const Mat<Dim>& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }
  double determinant() const { return m_.determinant(); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.m_ + b.m_); }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) { return SymMatrix(a.m_ - b.m_); }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.m_); }

 private:
  Mat<Dim> m_;
};

using Sym2 = SymMatrix<2>;
using Sym3 = SymMatrix<3>;

/// Eigenvalues sorted descending, eigenvectors stored as the columns of an
/// orthonormal matrix in the same order.
template <int Dim>
struct EigenData {
  Vec<Dim> values;
  Mat<Dim> vectors;

  Mat<Dim> reconstruct() const { return vectors * values.asDiagonal() * vectors.transpose(); }

  template <class Fn>
  SymMatrix<Dim> apply(Fn&& fn) const {
    Vec<Dim> mapped;
    for (int i = 0; i < Dim; ++i) mapped(i) = fn(values(i));
    return SymMatrix<Dim>(vectors * mapped.asDiagonal() * vectors.transpose());
  }
};

namespace detail {

inline EigenData<2> eigen_sym2(const Mat2& a) {
  const double p = a(0, 0), b = 0.5 * (a(0, 1) + a(1, 0)), c = a(1, 1);
  const double mean = 0.5 * (p + c);
  const double radius = std::hypot(0.5 * (p - c), b);
  double l1 = mean + radius;
  double l2 = mean - radius;
  // product form keeps the small eigenvalue of an SPD matrix accurate
  if (mean > 0.0 && l1 > 0.0) l2 = (p * c - b * b) / l1;

  EigenData<2> out;
  out.values << l1, l2;
  if (std::abs(l1 - l2) < tol::kEqualEigen * (std::abs(l1) + std::abs(l2)) || radius == 0.0) {
    out.vectors = Mat2::Identity();
    return out;
  }
  const double theta = 0.5 * std::atan2(2.0 * b, p - c);
  const double cs = std::cos(theta), sn = std::sin(theta);
  out.vectors << cs, -sn,
                 sn, cs;
  return out;
}

inline double cofactor_trace3(const Mat3& s) {
  return s(1, 1) * s(2, 2) - s(1, 2) * s(2, 1) + s(0, 0) * s(2, 2) - s(0, 2) * s(2, 0) + s(0, 0) * s(1, 1) -
         s(0, 1) * s(1, 0);
}

inline Vec3 any_orthogonal(const Vec3& v) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(v(i)) < std::abs(v(k))) k = i;
  Vec3 e = Vec3::Zero();
  e(k) = 1.0;
  return (e - e.dot(v) * v).normalized();
}

// Kernel direction of the (nearly) rank-2 matrix m via the largest cross
// product of its rows.
inline Vec3 null_direction(const Mat3& m) {
  const Vec3 r0 = m.row(0).transpose(), r1 = m.row(1).transpose(), r2 = m.row(2).transpose();
  const std::array<Vec3, 3> candidates{r0.cross(r1), r0.cross(r2), r1.cross(r2)};
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (candidates[i].squaredNorm() > candidates[best].squaredNorm()) best = i;
  const double n = candidates[best].norm();
  if (n == 0.0) return Vec3::UnitX();
  return candidates[best] / n;
}

// One Newton step on det(A - l I). Both the value and the derivative come from
// the shifted matrix, so clustered spectra do not cancel through the invariants.
inline double newton_polish(const Mat3& a, double lambda) {
  const Mat3 s = a - lambda * Mat3::Identity();
  const double f = s.determinant();
  const double df = -cofactor_trace3(s);
  if (df == 0.0) return lambda;
  const double step = f / df;
  // a large correction means the root is (nearly) repeated; keep Cardano's value
  if (std::abs(step) > 1e-6 * (1.0 + std::abs(lambda))) return lambda;
  return lambda - step;
}

inline EigenData<3> eigen_sym3(const Mat3& a_in) {
  const Mat3 a = 0.5 * (a_in + a_in.transpose());
  const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);

  EigenData<3> out;
  if (off == 0.0) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
    out.vectors.setZero();
    for (int c = 0; c < 3; ++c) {
      out.values(c) = a(idx[c], idx[c]);
      out.vectors(idx[c], c) = 1.0;
    }
    return out;
  }

  const double q = a.trace() / 3.0;
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                    (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * off;
  const double p = std::sqrt(p2 / 6.0);
  const Mat3 b = (a - q * Mat3::Identity()) / p;
  const double r = std::clamp(0.5 * b.determinant(), -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;

  double e1 = q + 2.0 * p * std::cos(phi);
  double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  double e2 = 3.0 * q - e1 - e3;
  e1 = newton_polish(a, e1);
  e2 = newton_polish(a, e2);
  e3 = newton_polish(a, e3);

  // Resolve the best separated eigenvalue by a cross product, then solve the
  // remaining 2x2 problem in its orthogonal complement.
  const bool top_isolated = (e1 - e2) >= (e2 - e3);
  const double isolated = top_isolated ? e1 : e3;
  const Vec3 v = null_direction(a - isolated * Mat3::Identity());
  const Vec3 u = any_orthogonal(v);
  const Vec3 w = v.cross(u);
  Mat2 reduced;
  reduced << u.dot(a * u), u.dot(a * w),
             w.dot(a * u), w.dot(a * w);
  const EigenData<2> sub = eigen_sym2(reduced);
  const Vec3 s0 = sub.vectors(0, 0) * u + sub.vectors(1, 0) * w;
  const Vec3 s1 = sub.vectors(0, 1) * u + sub.vectors(1, 1) * w;

  if (top_isolated) {
    out.values << isolated, sub.values(0), sub.values(1);
    out.vectors.col(0) = v;
    out.vectors.col(1) = s0;
    out.vectors.col(2) = s1;
  } else {
    out.values << sub.values(0), sub.values(1), isolated;
    out.vectors.col(0) = s0;
    out.vectors.col(1) = s1;
    out.vectors.col(2) = v;
  }
  return out;
}

}  // namespace detail

/// Eigendecomposition of a symmetric 2x2 or 3x3 matrix.
///
/// 2x2 uses the trace/determinant closed form with axis-aligned vectors when
/// the eigenvalues coincide to 1e-12 relative; 3x3 uses the trigonometric
/// Cardano solution with one Newton step per root.
template <int Dim>
EigenData<Dim> eigen_sym(const SymMatrix<Dim>& a) {
  if constexpr (Dim == 2)
    return detail::eigen_sym2(a.matrix());
  else
    return detail::eigen_sym3(a.matrix());
}

template <int Dim>
Mat<Dim> identity() {
  return Mat<Dim>::Identity();
}

/// U = sqrt(F^T F); throws NonPositiveDeterminant when det F <= 0.
template <int Dim>
SymMatrix<Dim> right_stretch(const Mat<Dim>& f) {
  if (!(f.determinant() > 0.0)) throw Error(ErrorCode::NonPositiveDeterminant, "det F <= 0");
  const EigenData<Dim> eig = eigen_sym(SymMatrix<Dim>(f.transpose() * f));
  if (!(eig.values(Dim - 1) > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "F^T F lost definiteness");
  return eig.apply([](double x) { return std::sqrt(x); });
}

/// Singular values of F (eigenvalues of U), descending.
template <int Dim>
Vec<Dim> principal_stretches(const Mat<Dim>& f) {
  if (!(f.determinant() > 0.0)) throw Error(ErrorCode::NonPositiveDeterminant, "det F <= 0");
  const EigenData<Dim> eig = eigen_sym(SymMatrix<Dim>(f.transpose() * f));
  if (!(eig.values(Dim - 1) > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "F^T F lost definiteness");
  return eig.values.cwiseSqrt();
}

template <int Dim>
void require_spd(const EigenData<Dim>& eig) {
  if (!(eig.values(Dim - 1) > tol::kSpd))
    throw Error(ErrorCode::NotPositiveDefinite, "smallest eigenvalue " + std::to_string(eig.values(Dim - 1)));
}

template <int Dim>
SymMatrix<Dim> spd_log(const SymMatrix<Dim>& a) {
  const EigenData<Dim> eig = eigen_sym(a);
  require_spd(eig);
  return eig.apply([](double x) { return std::log(x); });
}

template <int Dim>
SymMatrix<Dim> sym_exp(const SymMatrix<Dim>& a) {
  return eigen_sym(a).apply([](double x) { return std::exp(x); });
}

template <int Dim>
SymMatrix<Dim> deviator(const SymMatrix<Dim>& a) {
  return SymMatrix<Dim>(a.matrix() - (a.trace() / Dim) * Mat<Dim>::Identity());
}

template <int Dim>
Mat<Dim> deviator(const Mat<Dim>& a) {
  return a - (a.trace() / Dim) * Mat<Dim>::Identity();
}

/// Cofactor from signed minors; Cof A = det(A) A^{-T} when A is invertible.
template <int Dim>
Mat<Dim> cofactor(const Mat<Dim>& a) {
  Mat<Dim> c;
  if constexpr (Dim == 2) {
    c << a(1, 1), -a(1, 0),
        -a(0, 1), a(0, 0);
  } else {
    for (int i = 0; i < 3; ++i) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      for (int j = 0; j < 3; ++j) {
        const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
        c(i, j) = a(i1, j1) * a(i2, j2) - a(i1, j2) * a(i2, j1);
      }
    }
  }
  return c;
}

enum class Region { InteriorD, OnGamma2, Outside };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::InteriorD: return "InteriorD";
    case Region::OnGamma2: return "OnGamma2";
    case Region::Outside: return "Outside";
  }
  return "?";
}

/// Principal invariants of the stretch tensor. In 2D (i1, i2) = (tr U, det U)
/// and region classifies the point against D = {i1^2 - 4 i2 > 0}; in 3D i3 is
/// det U and region flags repeated eigenvalues as OnGamma2.
struct InvariantPoint {
  int dim = 2;
  double i1 = 0.0;
  double i2 = 0.0;
  double i3 = 0.0;
  Region region = Region::Outside;

  static Region classify(double i1, double i2) {
    const double disc = i1 * i1 - 4.0 * i2;
    if (std::abs(disc) <= tol::kGamma2 * i1 * i1) return Region::OnGamma2;
    return disc > 0.0 ? Region::InteriorD : Region::Outside;
  }

  static InvariantPoint planar(double i1, double i2) {
    return InvariantPoint{2, i1, i2, 0.0, classify(i1, i2)};
  }

  double discriminant() const { return i1 * i1 - 4.0 * i2; }
};

template <int Dim>
InvariantPoint invariants(const SymMatrix<Dim>& u) {
  const EigenData<Dim> eig = eigen_sym(u);
  require_spd(eig);
  if constexpr (Dim == 2) {
    return InvariantPoint::planar(u.trace(), u.determinant());
  } else {
    const Mat3& m = u.matrix();
    InvariantPoint p;
    p.dim = 3;
    p.i1 = m.trace();
    p.i2 = cofactor<3>(m).trace();
    p.i3 = m.determinant();
    const auto& l = eig.values;
    const double scale = l.cwiseAbs().sum();
    const bool repeated = (l(0) - l(1)) <= tol::kEqualEigen * scale || (l(1) - l(2)) <= tol::kEqualEigen * scale;
    p.region = repeated ? Region::OnGamma2 : Region::InteriorD;
    return p;
  }
}

/// Inverse of (l1, l2) -> (l1 + l2, l1 l2) on D and gamma2; returns l1 >= l2.
inline std::pair<double, double> invariants_to_eigenvalues(const InvariantPoint& p) {
  if (p.dim != 2) throw Error(ErrorCode::InvalidDimensions, "invariants_to_eigenvalues is planar only");
  const double disc = p.discriminant();
  if (disc < 0.0 && std::abs(disc) > tol::kGamma2 * p.i1 * p.i1)
    throw Error(ErrorCode::OutsideDomain, "i1^2 - 4 i2 < 0");
  if (!(p.i1 > 0.0) || !(p.i2 > 0.0)) throw Error(ErrorCode::OutsideDomain, "invariants must be positive");
  const double root = std::sqrt(std::max(disc, 0.0));
  const double l1 = 0.5 * (p.i1 + root);
  return {l1, p.i2 / l1};
}

inline Mat2 rotation2(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle),
       std::sin(angle), std::cos(angle);
  return r;
}

/// Uniformly distributed rotation (Haar measure on SO(Dim)).
template <int Dim, class Rng>
Mat<Dim> random_rotation(Rng& rng) {
  if constexpr (Dim == 2) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    return rotation2(angle(rng));
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return q.toRotationMatrix();
  }
}

template <int Dim, class Rng>
Vec<Dim> random_unit_vector(Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec<Dim> v;
  do {
    for (int i = 0; i < Dim; ++i) v(i) = gauss(rng);
  } while (v.norm() < 1e-8);
  return v.normalized();
}

/// Random SPD matrix Q diag(l) Q^T with eigenvalues log-uniform in [lo, hi].
template <int Dim, class Rng>
SymMatrix<Dim> random_spd(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> ulog(std::log(lo), std::log(hi));
  Vec<Dim> l;
  for (int i = 0; i < Dim; ++i) l(i) = std::exp(ulog(rng));
  const Mat<Dim> q = random_rotation<Dim>(rng);
  return SymMatrix<Dim>(q * l.asDiagonal() * q.transpose());
}

}  // namespace hencky
