#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hencky/tensor.hpp"

using namespace hencky;

namespace {

// Independent oracle: Eigen's iterative symmetric solver.
template <int Dim>
Vec<Dim> reference_eigenvalues_desc(const Mat<Dim>& a) {
  Eigen::SelfAdjointEigenSolver<Mat<Dim>> es(a);
  Vec<Dim> v = es.eigenvalues();
  return v.reverse();
}

template <int Dim>
Mat<Dim> random_matrix_pos_det(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    Mat<Dim> f;
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) f(i, j) = u(rng);
    if (f.determinant() > 0.05) return f;
  }
}

}  // namespace

TEST(Eigen2, ClosedFormMatchesReference) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Mat2 a;
    a << u(rng), u(rng), 0.0, u(rng);
    a(1, 0) = a(0, 1);
    const auto eig = eigen_sym(Sym2(a));
    const Vec2 ref = reference_eigenvalues_desc<2>(a);
    EXPECT_NEAR(eig.values(0), ref(0), 1e-12 * (1 + a.norm()));
    EXPECT_NEAR(eig.values(1), ref(1), 1e-12 * (1 + a.norm()));
    EXPECT_GE(eig.values(0), eig.values(1));
    EXPECT_LE((eig.reconstruct() - a).norm(), 1e-12 * (1 + a.norm()));
    EXPECT_LE((eig.vectors.transpose() * eig.vectors - Mat2::Identity()).norm(), 1e-13);
  }
}

TEST(Eigen2, EqualEigenvaluesGiveAxisVectors) {
  const auto eig = eigen_sym(Sym2(2.0 * Mat2::Identity()));
  EXPECT_EQ(eig.values(0), 2.0);
  EXPECT_EQ(eig.values(1), 2.0);
  EXPECT_EQ(eig.vectors, Mat2::Identity());
}

TEST(Eigen3, CardanoMatchesReference) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 2000; ++trial) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) a(i, j) = a(j, i) = u(rng);
    const auto eig = eigen_sym(Sym3(a));
    const Vec3 ref = reference_eigenvalues_desc<3>(a);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(eig.values(i), ref(i), 1e-12 * (1 + a.norm()));
    EXPECT_GE(eig.values(0), eig.values(1));
    EXPECT_GE(eig.values(1), eig.values(2));
    EXPECT_LE((eig.reconstruct() - a).norm(), 1e-12 * (1 + a.norm()));
    EXPECT_LE((eig.vectors.transpose() * eig.vectors - Mat3::Identity()).norm(), 1e-12);
  }
}

TEST(Eigen3, RepeatedAndNearlyRepeatedEigenvalues) {
  std::mt19937_64 rng(13);
  for (double gap : {0.0, 1e-14, 1e-10, 1e-6, 1e-3}) {
    for (int trial = 0; trial < 200; ++trial) {
      const Mat3 q = random_rotation<3>(rng);
      Vec3 l(3.0 + gap, 3.0, 0.5);
      if (trial % 2) l = Vec3(4.0, 1.0 + gap, 1.0);
      const Mat3 a = q * l.asDiagonal() * q.transpose();
      const auto eig = eigen_sym(Sym3(a));
      EXPECT_LE((eig.reconstruct() - a).norm(), 1e-12 * (1 + a.norm())) << "gap " << gap;
      EXPECT_LE((eig.vectors.transpose() * eig.vectors - Mat3::Identity()).norm(), 1e-12);
    }
  }
  const auto iso = eigen_sym(Sym3(5.0 * Mat3::Identity()));
  EXPECT_EQ(iso.values, Vec3(5.0, 5.0, 5.0));
}

TEST(Eigen3, WideSpreadSpd) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    const Sym3 a = random_spd<3>(rng, 1e-6, 1e6);
    const auto eig = eigen_sym(a);
    EXPECT_LE((eig.reconstruct() - a.matrix()).norm(), 1e-12 * (1 + a.norm()));
  }
}

TEST(RightStretch, Examples) {
  EXPECT_LE((right_stretch<2>(Mat2::Identity()).matrix() - Mat2::Identity()).norm(), 1e-15);
  Mat2 d;
  d << 3, 0, 0, 1;
  EXPECT_LE((right_stretch<2>(d).matrix() - d).norm(), 1e-14);

  Mat2 s;
  s << 2, 0, 0, 0.5;
  const Mat2 f = rotation2(std::numbers::pi / 4) * s;
  EXPECT_LE((right_stretch<2>(f).matrix() - s).norm(), 1e-14);
}

TEST(RightStretch, RejectsNonPositiveDeterminant) {
  Mat2 f;
  f << -1, 0, 0, 1;
  try {
    right_stretch<2>(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveDeterminant);
  }
  EXPECT_THROW(right_stretch<3>(Mat3::Zero()), Error);
}

template <int Dim>
void check_right_stretch_properties(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat<Dim> f = random_matrix_pos_det<Dim>(rng);
    const SymMatrix<Dim> u = right_stretch<Dim>(f);
    const auto eig = eigen_sym(u);
    EXPECT_GT(eig.values(Dim - 1), 0.0);
    const double fn2 = f.squaredNorm();
    EXPECT_LE((u.matrix() * u.matrix() - f.transpose() * f).norm(), 1e-10 * (1 + fn2));
    const Mat<Dim> q = random_rotation<Dim>(rng);
    EXPECT_LE((right_stretch<Dim>(Mat<Dim>(q * f)).matrix() - u.matrix()).norm(), 1e-10 * (1 + u.norm()));
  }
}

TEST(RightStretch, SpdAndLeftRotationInvariant2D) { check_right_stretch_properties<2>(21); }
TEST(RightStretch, SpdAndLeftRotationInvariant3D) { check_right_stretch_properties<3>(22); }

TEST(SpdLog, Examples) {
  const Sym2 d = Sym2::diagonal(Vec2(2.5, 0.25));
  const Mat2 l = spd_log(d).matrix();
  EXPECT_NEAR(l(0, 0), std::log(2.5), 1e-15);
  EXPECT_NEAR(l(1, 1), std::log(0.25), 1e-15);
  EXPECT_EQ(l(0, 1), 0.0);
  EXPECT_LE(spd_log(Sym3::identity()).norm(), 1e-15);

  Mat2 a;
  a << 2, 1, 1, 2;
  // eigenvectors (1,1)/sqrt2 for 3 and (1,-1)/sqrt2 for 1
  Mat2 expected;
  expected << 1, 1, 1, 1;
  expected *= 0.5 * std::log(3.0);
  EXPECT_LE((spd_log(Sym2(a)).matrix() - expected).norm(), 1e-14);
}

TEST(SpdLog, RejectsIndefinite) {
  try {
    spd_log(Sym2::diagonal(Vec2(1.0, -1.0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
  EXPECT_THROW(spd_log(Sym3::diagonal(Vec3(1.0, 1.0, 1e-15))), Error);
}

TEST(SpdLog, ExpRoundTrip) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const Sym2 a2 = random_spd<2>(rng, 1e-3, 1e3);
    EXPECT_LE((sym_exp(spd_log(a2)).matrix() - a2.matrix()).norm(), 1e-9 * (1 + a2.norm()));
    const Sym3 a3 = random_spd<3>(rng, 1e-3, 1e3);
    EXPECT_LE((sym_exp(spd_log(a3)).matrix() - a3.matrix()).norm(), 1e-9 * (1 + a3.norm()));
  }
}

TEST(Deviator, Examples) {
  EXPECT_EQ(deviator(Sym2::identity()).norm(), 0.0);
  const Sym2 tl = Sym2::diagonal(Vec2(1, -1));
  EXPECT_EQ((deviator(tl).matrix() - tl.matrix()).norm(), 0.0);
  EXPECT_EQ((deviator(Sym2::diagonal(Vec2(3, 1))).matrix() - tl.matrix()).norm(), 0.0);

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const Sym3 a = random_spd<3>(rng, 1e-3, 1e3);
    EXPECT_LE(std::abs(deviator(a).trace()), 1e-14 * a.norm());
  }
}

TEST(Invariants, Examples) {
  const auto p = invariants(Sym2::diagonal(Vec2(3, 1)));
  EXPECT_EQ(p.i1, 4.0);
  EXPECT_EQ(p.i2, 3.0);
  EXPECT_EQ(p.region, Region::InteriorD);

  const auto g = invariants(Sym2::diagonal(Vec2(2, 2)));
  EXPECT_EQ(g.i1, 4.0);
  EXPECT_EQ(g.i2, 4.0);
  EXPECT_EQ(g.region, Region::OnGamma2);

  const auto p3 = invariants(Sym3::diagonal(Vec3(1, 2, 3)));
  EXPECT_NEAR(p3.i1, 6.0, 1e-14);
  EXPECT_NEAR(p3.i2, 11.0, 1e-14);
  EXPECT_NEAR(p3.i3, 6.0, 1e-14);
  EXPECT_EQ(p3.region, Region::InteriorD);

  EXPECT_EQ(InvariantPoint::planar(2, 4).region, Region::Outside);
  EXPECT_THROW(invariants(Sym2::diagonal(Vec2(1, 0))), Error);
}

TEST(Invariants, ToEigenvalues) {
  auto [a1, a2] = invariants_to_eigenvalues(InvariantPoint::planar(4, 3));
  EXPECT_NEAR(a1, 3.0, 1e-15);
  EXPECT_NEAR(a2, 1.0, 1e-15);
  auto [b1, b2] = invariants_to_eigenvalues(InvariantPoint::planar(4, 4));
  EXPECT_EQ(b1, 2.0);
  EXPECT_EQ(b2, 2.0);
  auto [c1, c2] = invariants_to_eigenvalues(InvariantPoint::planar(2.5, 1));
  EXPECT_NEAR(c1, 2.0, 1e-15);
  EXPECT_NEAR(c2, 0.5, 1e-15);

  try {
    invariants_to_eigenvalues(InvariantPoint::planar(2, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutsideDomain);
  }
}

TEST(Invariants, RoundTripAndDevLogIdentity) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 5000; ++trial) {
    const Sym2 u = random_spd<2>(rng, 1e-2, 1e2);
    const auto eig = eigen_sym(u);
    const auto p = invariants(u);
    if (p.region != Region::InteriorD) continue;
    auto [l1, l2] = invariants_to_eigenvalues(p);
    EXPECT_NEAR(l1, eig.values(0), 1e-12 * eig.values(0));
    // the small root inherits the conditioning of the big one
    EXPECT_NEAR(l2, eig.values(1), 1e-12 * eig.values(0));
    EXPECT_NEAR(l1 + l2, p.i1, 1e-12 * p.i1);
    EXPECT_NEAR(l1 * l2, p.i2, 1e-12 * p.i2);

    const double lhs = deviator(spd_log(u)).matrix().squaredNorm();
    const double lr = std::log(eig.values(0) / eig.values(1));
    EXPECT_NEAR(lhs, 0.5 * lr * lr, 1e-12 * (1 + lhs));
  }
}

TEST(Cofactor, Examples) {
  EXPECT_EQ(cofactor<3>(Mat3::Identity()), Mat3::Identity());
  Mat2 d;
  d << 2, 0, 0, 7;
  Mat2 cd;
  cd << 7, 0, 0, 2;
  EXPECT_EQ(cofactor<2>(d), cd);
  const Mat3 c = cofactor<3>(Vec3(1, 2, 3).asDiagonal());
  EXPECT_EQ(c, Mat3(Vec3(6, 3, 2).asDiagonal()));
}

TEST(Cofactor, AdjugateIdentity) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = u(rng);
    if (trial % 10 == 0) a.row(2) = a.row(0) + a.row(1);  // singular
    const double n = a.norm();
    EXPECT_LE((a * cofactor<3>(a).transpose() - a.determinant() * Mat3::Identity()).norm(), 1e-12 * (1 + n * n * n));
    Mat2 b = a.topLeftCorner<2, 2>();
    EXPECT_LE((b * cofactor<2>(b).transpose() - b.determinant() * Mat2::Identity()).norm(), 1e-12 * (1 + n * n));
  }
}
