#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hencky/energy.hpp"

using namespace hencky;

namespace {

const MaterialParams kDefault{};

template <int Dim>
Mat<Dim> random_f(std::mt19937_64& rng, double lo = 0.2, double hi = 5.0) {
  std::uniform_real_distribution<double> ulog(std::log(0.3), std::log(3.0));
  for (;;) {
    Vec<Dim> s;
    for (int i = 0; i < Dim; ++i) s(i) = std::exp(ulog(rng));
    const Mat<Dim> f = random_rotation<Dim>(rng) * s.asDiagonal() * random_rotation<Dim>(rng);
    const double d = f.determinant();
    if (d >= lo && d <= hi) return f;
  }
}

// Central-difference gradient of W_eH; the stress oracle.
Mat2 fd_gradient(const Mat2& f, const MaterialParams& p, double h) {
  Mat2 g;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat2 e = Mat2::Zero();
      e(i, j) = h;
      g(i, j) = (energy_eH<2>(f + e, p).value - energy_eH<2>(f - e, p).value) / (2 * h);
    }
  return g;
}

}  // namespace

TEST(Params, Validation) {
  EXPECT_NO_THROW(kDefault.validate());
  for (auto bad : {MaterialParams{0, 1, 1, 1, 2}, MaterialParams{1, -1, 1, 1, 2}, MaterialParams{1, 1, 0, 1, 2},
                   MaterialParams{1, 1, 1, 0, 2}, MaterialParams{1, 1, 1, 1, 0}}) {
    try {
      bad.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidParams);
    }
  }
}

TEST(Energy, Examples) {
  const MaterialParams p{2.0, 3.0, 0.7, 0.4, 2};
  EXPECT_NEAR(energy_eH<2>(Mat2::Identity(), p).value, 2.0 / 0.7 + 3.0 / 0.8, 1e-15);
  EXPECT_NEAR(energy_eH<3>(Mat3::Identity(), p).value, 2.0 / 0.7 + 3.0 / 0.8, 1e-15);

  Mat2 flip;
  flip << -1, 0, 0, 1;
  const EnergyValue inf = energy_eH<2>(flip, p);
  EXPECT_FALSE(inf.finite);
  EXPECT_TRUE(std::isinf(inf.value));
  EXPECT_FALSE(energy_eH<2>(Mat2::Zero(), p).finite);

  const double l2 = std::log(2.0);
  const double iso = 3.0 * std::exp(l2 * l2 / 6.0);
  const double vol = 4.0 * std::exp(l2 * l2 / 8.0);
  EXPECT_NEAR(iso, 3.250107, 1e-6);
  EXPECT_NEAR(vol, 4.247587, 1e-6);
  const Mat2 f = Vec2(2, 1).asDiagonal();
  EXPECT_NEAR(energy_iso<2>(f, kDefault).value, iso, 1e-14);
  EXPECT_NEAR(energy_vol<2>(f, kDefault).value, vol, 1e-14);
  EXPECT_NEAR(energy_eH<2>(f, kDefault).value, iso + vol, 1e-14);
}

TEST(Energy, SplitTerms) {
  const MaterialParams p{1.5, 2.5, 2.0, 0.3, 2};
  const Mat2 iso_def = Vec2(3.0, 1.0 / 3.0).asDiagonal();
  EXPECT_NEAR(energy_vol<2>(iso_def, p).value, 2.5 / 0.6, 1e-14);
  EXPECT_NEAR(energy_iso<2>(Mat2(2.7 * Mat2::Identity()), p).value, 1.5 / 2.0, 1e-15);
  EXPECT_NEAR(energy_iso<3>(Mat3(0.4 * Mat3::Identity()), p).value, 1.5 / 2.0, 1e-15);
  const Mat2 f = Vec2(std::numbers::e, 1.0).asDiagonal();
  EXPECT_NEAR(energy_iso<2>(f, p).value / (1.5 / 2.0), std::numbers::e, 1e-14);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Mat3 g = random_f<3>(rng);
    EXPECT_EQ(energy_eH<3>(g, p).value, energy_iso<3>(g, p).value + energy_vol<3>(g, p).value);
  }
}

TEST(Energy, GeneralVolumetricExponent) {
  MaterialParams p = kDefault;
  p.m = 3;
  p.khat = 1.0 / 81.0;
  const Mat3 f = 2.0 * Mat3::Identity();
  const double tr = 3.0 * std::log(2.0);
  EXPECT_NEAR(energy_vol<3>(f, p).value, 1.0 / (2.0 / 81.0) * std::exp(tr * tr * tr / 81.0), 1e-12);
}

TEST(QuadraticHencky, Examples) {
  const MaterialParams p{1.3, 0.7, 1.0, 1.0, 2};
  EXPECT_EQ(energy_quadratic_hencky<2>(Mat2::Identity(), p).value, 0.0);
  EXPECT_NEAR(energy_quadratic_hencky<2>(Mat2(std::numbers::e * Mat2::Identity()), p).value, 2.0 * 0.7, 1e-14);
  Mat2 flip;
  flip << 0, 1, 1, 0;
  EXPECT_FALSE(energy_quadratic_hencky<2>(flip, p).finite);
}

// Both energies share log U, so the defect is (mu/k)(e^{kx} - 1 - kx) + ...
// with x = O(eps^2): quartic, a factor 16 per halving. Against linear
// elasticity (sym grad u instead of log U) the defect is cubic.
TEST(QuadraticHencky, SmallStrainDefectOrders) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  auto linear = [](const Mat2& h, double eps) {
    const Mat2 e = 0.5 * eps * (h + h.transpose());
    const double tr = e.trace();
    return kDefault.mu * deviator<2>(e).squaredNorm() + 0.5 * kDefault.kappa * tr * tr;
  };
  for (int trial = 0; trial < 5; ++trial) {
    Mat2 h;
    h << g(rng), g(rng), g(rng), g(rng);
    h /= h.norm();
    auto excess = [&](double eps) {
      return energy_eH<2>(Mat2(Mat2::Identity() + eps * h), kDefault).value - kDefault.ground_energy();
    };
    auto defect_h = [&](double eps) {
      return std::abs(excess(eps) - energy_quadratic_hencky<2>(Mat2(Mat2::Identity() + eps * h), kDefault).value);
    };
    auto defect_lin = [&](double eps) { return std::abs(excess(eps) - linear(h, eps)); };
    EXPECT_NEAR(defect_h(1e-2) / defect_h(5e-3), 16.0, 1.6);
    EXPECT_NEAR(defect_h(5e-3) / defect_h(2.5e-3), 16.0, 1.6);
    EXPECT_NEAR(defect_lin(1e-2) / defect_lin(5e-3), 8.0, 0.8);
    EXPECT_NEAR(defect_lin(5e-3) / defect_lin(2.5e-3), 8.0, 0.8);
  }
}

TEST(Energy, ObjectivityAndIsotropy) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 1000; ++t) {
    const Mat2 f2 = random_f<2>(rng);
    const Mat2 r2 = random_rotation<2>(rng) * f2 * random_rotation<2>(rng);
    const double w2 = energy_eH<2>(f2, kDefault).value;
    EXPECT_NEAR(energy_eH<2>(r2, kDefault).value, w2, 1e-10 * w2);

    const Mat3 f3 = random_f<3>(rng);
    const Mat3 r3 = random_rotation<3>(rng) * f3 * random_rotation<3>(rng);
    const double w3 = energy_eH<3>(f3, kDefault).value;
    EXPECT_NEAR(energy_eH<3>(r3, kDefault).value, w3, 1e-10 * w3);
  }
}

TEST(Energy, GlobalMinimumAtRotations) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3, 3);
  const double floor = kDefault.ground_energy();
  int tested = 0;
  while (tested < 100000) {
    Mat2 f;
    f << u(rng), u(rng), u(rng), u(rng);
    if (!(f.determinant() > 0)) continue;
    ++tested;
    EXPECT_GE(energy_eH<2>(f, kDefault).value, floor);
  }
  for (int t = 0; t < 100; ++t) {
    const Mat3 q = random_rotation<3>(rng);
    EXPECT_NEAR(energy_eH<3>(q, kDefault).value, floor, 1e-8);
  }
}

TEST(Energy, VolumetricIsochoricDecoupling) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 500; ++t) {
    const Mat3 f = random_f<3>(rng);
    const double c = std::exp(std::uniform_real_distribution<double>(-1.5, 1.5)(rng));
    const double wi = energy_iso<3>(f, kDefault).value;
    EXPECT_NEAR(energy_iso<3>(Mat3(c * f), kDefault).value, wi, 1e-10 * wi);

    // energy_vol depends on det only: compare with a diagonal of equal det
    const double d = f.determinant();
    const Mat3 g = Vec3(d, 1.0, 1.0).asDiagonal();
    const double wv = energy_vol<3>(f, kDefault).value;
    EXPECT_NEAR(energy_vol<3>(g, kDefault).value, wv, 1e-12 * wv);
  }
}

TEST(GIso, Examples) {
  EXPECT_EQ(g_iso(1.7, 1.7, 0.9), 1.0);
  EXPECT_NEAR(g_iso(std::numbers::e, 1.0, 1.0), std::exp(0.5), 1e-15);
  const double l3 = std::log(3.0);
  EXPECT_NEAR(g_iso(3.0, 1.0, 1.0 / 3.0), std::exp(l3 * l3 / 6.0), 1e-15);
  EXPECT_NEAR(g_iso(3.0, 1.0, 1.0 / 3.0), 1.222818, 1e-6);
  EXPECT_EQ(g_iso(3.0, 2.0, 0.5), g_iso(2.0, 3.0, 0.5));
  EXPECT_NEAR(g_iso(3.0, 2.0, 0.5), g_iso(1.0 / 3.0, 0.5, 0.5), 1e-15);
  EXPECT_THROW(g_iso(0.0, 1.0, 1.0), Error);
}

TEST(Psi, Examples) {
  const double k = 0.45;
  EXPECT_NEAR(psi(4, 3, k), g_iso(3, 1, k), 1e-14);
  EXPECT_NEAR(psi(4, 4 - 1e-12, k), 1.0, 1e-9);
  EXPECT_EQ(psi(4, 4, k), 1.0);
  const double l4 = std::log(4.0);
  EXPECT_NEAR(psi(2.5, 1, 1.0 / 3.0), std::exp(l4 * l4 / 6.0), 1e-14);
  EXPECT_NEAR(psi(2.5, 1, 1.0 / 3.0), 1.377544, 1e-6);
  EXPECT_THROW(psi(2, 4, k), Error);
}

TEST(Psi, AgreesWithEigenvalueRoute) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> ul(std::log(1e-2), std::log(1e2));
  for (int t = 0; t < 5000; ++t) {
    const double a = std::exp(ul(rng)), b = std::exp(ul(rng));
    const double k = 0.25 + 0.1 * (t % 10);
    EXPECT_NEAR(psi(a + b, a * b, k), g_iso(a, b, k), 1e-12 * g_iso(a, b, k));
  }
}

TEST(Psi, MonotoneInI1) {
  for (double i2 : {0.01, 0.5, 1.0, 4.0, 25.0}) {
    double prev = 1.0;
    const double start = 2.0 * std::sqrt(i2);
    for (int j = 1; j <= 2000; ++j) {
      const double i1 = start * (1.0 + 1e-3 * j);
      const double v = psi(i1, i2, 1.0 / 3.0);
      EXPECT_GE(v - prev, -1e-12);
      prev = v;
    }
  }
}

TEST(PsiHat, Branches) {
  const double k = 1.0 / 3.0;
  EXPECT_EQ(psi_hat(2, 4, k), 1.0);
  EXPECT_EQ(psi_hat(4, 4, k), 1.0);
  EXPECT_EQ(psi_hat(0, 1, k), 1.0);
  EXPECT_EQ(psi_hat(4, 3, k), psi(4, 3, k));
  // continuity across gamma2
  EXPECT_NEAR(psi_hat(4 + 1e-9, 4, k), 1.0, 1e-8);
  EXPECT_THROW(psi_hat(-1, 1, k), Error);
}

TEST(PiolaStress, Examples) {
  EXPECT_EQ(piola_stress<2>(Mat2::Identity(), kDefault).norm(), 0.0);
  const double c = 1.7;
  const Mat2 s = piola_stress<2>(Mat2(c * Mat2::Identity()), kDefault);
  const double lc = std::log(c);
  const double expected = kDefault.kappa * std::exp(4.0 * kDefault.khat * lc * lc) * 2.0 * lc / c;
  EXPECT_NEAR(s(0, 0), expected, 1e-14);
  EXPECT_NEAR(s(1, 1), expected, 1e-14);
  EXPECT_NEAR(s(0, 1), 0.0, 1e-15);

  Mat2 flip;
  flip << 1, 0, 0, -1;
  EXPECT_THROW(piola_stress<2>(flip, kDefault), Error);
  MaterialParams p3 = kDefault;
  p3.m = 4;
  EXPECT_THROW(piola_stress<2>(Mat2::Identity(), p3), Error);
}

TEST(PiolaStress, MatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (const MaterialParams& p : {kDefault, MaterialParams{2.0, 5.0, 1.0, 0.5, 2}}) {
    for (int t = 0; t < 100; ++t) {
      const Mat2 f = random_f<2>(rng);
      const Mat2 s = piola_stress<2>(f, p);
      const Mat2 g = fd_gradient(f, p, 1e-5 * (1 + f.norm()));
      EXPECT_LE((s - g).norm(), 1e-6 * std::max(1.0, s.norm())) << f;
    }
  }
}

TEST(PiolaStress, NonSymmetricFNeedsLeftInverseTranspose) {
  // for a shear the stress is F^{-T} T with T coaxial with U; T F^{-T} differs
  Mat2 f;
  f << 1.0, 0.8, 0.0, 1.0;
  const Mat2 s = piola_stress<2>(f, kDefault);
  const Mat2 g = fd_gradient(f, kDefault, 1e-5 * (1 + f.norm()));
  EXPECT_LE((s - g).norm(), 1e-7 * s.norm());
  // the balance of angular momentum S1 F^T symmetric
  const Mat2 tau = s * f.transpose();
  EXPECT_NEAR(tau(0, 1), tau(1, 0), 1e-13);
}

TEST(Tangent, IdentityMatchesLinearElasticity) {
  const MaterialParams p{1.3, 2.1, 0.6, 0.2, 2};
  auto check = [&](auto dim_tag) {
    constexpr int Dim = decltype(dim_tag)::value;
    const Tangent<Dim> t = tangent_fd<Dim>(Mat<Dim>::Identity(), p);
    auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j)
        for (int k = 0; k < Dim; ++k)
          for (int l = 0; l < Dim; ++l) {
            const double expect = p.mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k)) +
                                  (p.kappa - 2.0 * p.mu / Dim) * d(i, j) * d(k, l);
            EXPECT_NEAR(t(i, j, k, l), expect, 1e-5) << i << j << k << l;
          }
  };
  check(std::integral_constant<int, 2>{});
  check(std::integral_constant<int, 3>{});
}

TEST(Tangent, RankOneAtIdentity) {
  std::mt19937_64 rng(13);
  const Tangent<3> t = tangent_fd<3>(Mat3::Identity(), kDefault);
  for (int s = 0; s < 50; ++s) {
    const Vec3 xi = random_unit_vector<3>(rng), eta = random_unit_vector<3>(rng);
    const double c = xi.dot(eta);
    const double closed = kDefault.mu + (kDefault.mu - 2.0 * kDefault.mu / 3 + kDefault.kappa) * c * c;
    const double h = 1e-4;
    const Mat3 a = xi * eta.transpose();
    const double direct = (energy_eH<3>(Mat3(Mat3::Identity() + h * a), kDefault).value - 2 * kDefault.ground_energy() +
                           energy_eH<3>(Mat3(Mat3::Identity() - h * a), kDefault).value) /
                          (h * h);
    EXPECT_GT(t.rank_one(xi, eta), 0.0);
    EXPECT_NEAR(t.rank_one(xi, eta), closed, 1e-5);
    EXPECT_NEAR(direct, closed, 1e-5);
  }
}

TEST(Tangent, MajorSymmetryAndDomain) {
  std::mt19937_64 rng(14);
  const Tangent<2> t = tangent_fd<2>(random_f<2>(rng), kDefault);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_EQ(t.data[a * 4 + b], t.data[b * 4 + a]);

  const Mat2 near_singular = Vec2(1.0, 1e-6).asDiagonal();
  EXPECT_THROW(tangent_fd<2>(near_singular, kDefault), Error);
}
