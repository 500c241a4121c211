#include <gtest/gtest.h>

#include "cmcnoid/error.hpp"
#include "cmcnoid/potential.hpp"

using namespace cmcnoid;

namespace {

// Coefficient of (z - p)^{-2} in q, by the trapezoid rule on a small circle:
// (1 / 2 pi i) \oint q(z) (z - p) dz.
Complex quadratic_residue(const NoidPotential& pot, Complex p, double r = 0.05) {
  const int m = 400;
  Complex acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const Complex e = std::exp(2.0 * kPi * kI * static_cast<double>(k) / static_cast<double>(m));
    const Complex z = p + r * e;
    acc += pot.q(z) * (z - p) * (kI * r * e);
  }
  return acc * (2.0 * kPi / m) / (2.0 * kPi * kI);
}

}  // namespace

TEST(H, Values) {
  EXPECT_NEAR(std::abs(h(Complex(0.3, 0.4), Complex(0.3, 0.4))), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h(-1.0, 1.0) - (-1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(h(1.0, 1.0)), 0.0, 1e-15);
}

TEST(H, RealOnCircle) {
  CircleGrid g(64);
  for (Complex l0 : {Complex(1.0), std::exp(kI * 0.7), Complex(0.4)}) {
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_LT(std::abs(h(g.point(j), l0).imag()), 1e-14);
  }
}

TEST(Rho, Values) {
  EXPECT_NEAR(std::abs(rho(Complex(0.6, 0.8), 2.5, Complex(0.6, 0.8))), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(rho(-1.0, 0.75, 1.0) - 0.25), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(rho(-1.0, -3.0, 1.0) + 0.5), 0.0, 1e-15);
}

TEST(Rho, NegativeRadicand) {
  try {
    rho(-1.0, 2.0, 1.0);  // 1 + 2 (-1) < 0
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeRadicand);
  }
}

TEST(Rho, ExtremaAtPlusMinusOne) {
  // For real or unimodular lambda0, |rho| on the circle is maximal at +-1.
  CircleGrid g(256);
  for (Complex l0 : {Complex(1.0), std::exp(kI * 0.9), Complex(0.5)}) {
    for (double w : {0.3, 0.75, -0.4}) {
      double max_grid = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) max_grid = std::max(max_grid, std::abs(rho(g.point(j), w, l0)));
      const double ends = std::max(std::abs(rho(1.0, w, l0)), std::abs(rho(-1.0, w, l0)));
      EXPECT_LE(max_grid, ends + 1e-14);
    }
  }
}

TEST(Potential, TrinoidQClosedForm) {
  NoidPotential pot(SpaceForm::r3(), Trinoid{1.0, 1.0, 1.0});
  for (Complex z : {Complex(0.3, 0.2), Complex(-1.5, 0.7), Complex(2.0, -3.0)}) {
    const Complex expected = (z * z - z + 1.0) / (4.0 * z * z * (z - 1.0) * (z - 1.0));
    EXPECT_NEAR(std::abs(pot.q(z) - expected), 0.0, 1e-14 * std::abs(expected));
  }
}

TEST(Potential, ThreeNoidQClosedForm) {
  NoidPotential pot(SpaceForm::r3(), SymmetricNoid{3, 1.0});
  for (Complex z : {Complex(0.3, 0.2), Complex(-1.5, 0.7)}) {
    const Complex expected = 9.0 * z / (4.0 * std::pow(z * z * z - 1.0, 2));
    EXPECT_NEAR(std::abs(pot.q(z) - expected), 0.0, 1e-14 * std::abs(expected));
  }
}

TEST(Potential, XiIsTraceFreeOffDiagonal) {
  NoidPotential pot(SpaceForm::s3(std::exp(kI * 0.5)), Trinoid{0.5, 0.6, 0.7});
  const Mat2 a = pot.xi_at(Complex(0.4, 0.3), std::exp(kI * 1.3));
  EXPECT_EQ(a.trace(), Complex(0.0));
  EXPECT_EQ(a(0, 0), Complex(0.0));
  EXPECT_NEAR(std::abs(a(0, 1) - std::exp(-kI * 1.3)), 0.0, 1e-15);
}

TEST(Potential, PoleGuard) {
  NoidPotential pot(SpaceForm::r3(), Trinoid{0.5, 0.5, 0.5});
  try {
    pot.xi_at(Complex(1.0 + 5e-4, 0.0), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleHit);
  }
  EXPECT_NO_THROW(pot.xi_at(Complex(1.0 + 2e-3, 0.0), 1.0));
}

TEST(Potential, ConstructorRejectsNegativeRadicand) {
  EXPECT_THROW(NoidPotential(SpaceForm::r3(), Trinoid{0.5, 0.5, 1.5}), Error);
  EXPECT_THROW(NoidPotential(SpaceForm::r3(), SymmetricNoid{3, 0.0}), Error);
  EXPECT_NO_THROW(NoidPotential(SpaceForm::r3(), SymmetricNoid{4, 1.0}));  // radicand 0 at -1
}

TEST(Potential, RadicandNonNegativeOnGrid) {
  CircleGrid g(256);
  NoidPotential pot(SpaceForm::h3(0.4), Trinoid{0.6, 0.7, 0.8}, g);
  for (double w : pot.weights()) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Complex r = 1.0 + w * h(g.point(j), pot.form().lambda0);
      EXPECT_GE(r.real(), 0.0);
      EXPECT_LT(std::abs(r.imag()), 1e-14);
    }
  }
}

TEST(Potential, QuadraticResidues) {
  NoidPotential tri(SpaceForm::r3(), Trinoid{0.3, 0.55, 0.7});
  EXPECT_NEAR(std::abs(quadratic_residue(tri, 0.0) - 0.3 / 4), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(quadratic_residue(tri, 1.0) - 0.55 / 4), 0.0, 1e-10);
  // At infinity, in u = 1/z, Q = q(1/u) u^{-4} du^2.
  const int m = 400;
  const double r = 0.05;
  Complex acc = 0.0;
  for (int k = 0; k < m; ++k) {
    const Complex e = std::exp(2.0 * kPi * kI * static_cast<double>(k) / static_cast<double>(m));
    const Complex u = r * e;
    acc += tri.q(1.0 / u) * std::pow(u, -4) * u * (kI * r * e);
  }
  EXPECT_NEAR(std::abs(acc / (static_cast<double>(m) * kI) - 0.7 / 4), 0.0, 1e-10);

  NoidPotential noid(SpaceForm::r3(), SymmetricNoid{5, 0.4});
  for (const auto& p : noid.poles()) EXPECT_NEAR(std::abs(quadratic_residue(noid, p, 0.02) - 0.1), 0.0, 1e-10);
}

TEST(Potential, NoidRotationalSymmetry) {
  for (int n : {3, 4, 6}) {
    NoidPotential pot(SpaceForm::r3(), SymmetricNoid{n, 0.5});
    const Complex alpha = std::exp(2.0 * kPi * kI / static_cast<double>(n));
    const Mat2 g = symmetry_matrix(n);
    const XiFunction xi = [&](Complex z, Complex l) { return pot.xi_at(z, l); };
    const XiFunction gauged = gauge(xi, [&](Complex, Complex) { return Mat2(g.inverse()); });
    for (Complex z : {Complex(0.3, 0.1), Complex(-0.7, 0.9)}) {
      for (Complex l : {std::exp(kI * 0.4), std::exp(kI * 2.2)}) {
        const Mat2 pullback = pot.xi_at(alpha * z, l) * alpha;
        EXPECT_LT((pullback - gauged(z, l)).norm(), 1e-12);
      }
    }
  }
}

TEST(Gauge, IdentityAndDiagonalConstant) {
  NoidPotential pot(SpaceForm::r3(), Trinoid{0.5, 0.5, 0.5});
  const XiFunction xi = [&](Complex z, Complex l) { return pot.xi_at(z, l); };
  const auto same = gauge(xi, [](Complex, Complex) { return Mat2(Mat2::Identity()); });
  const Complex z(0.4, 0.2), l = std::exp(kI * 0.3);
  EXPECT_LT((same(z, l) - xi(z, l)).norm(), 1e-12);
  Mat2 d = Mat2::Zero();
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  const auto conj = gauge(xi, [&](Complex, Complex) { return d; });
  EXPECT_LT((conj(z, l) - Mat2(d.inverse() * xi(z, l) * d)).norm(), 1e-12);
}

TEST(Gauge, NumericDerivativeMatchesAnalytic) {
  NoidPotential pot(SpaceForm::r3(), SymmetricNoid{3, 0.5});
  const XiFunction xi = [&](Complex z, Complex l) { return pot.xi_at(z, l); };
  const auto a = gauge(xi, infinity_gauge, infinity_gauge_derivative);
  const auto b = gauge(xi, infinity_gauge);
  const Complex z(2.0, 1.0), l = std::exp(kI * 0.8);
  EXPECT_LT((a(z, l) - b(z, l)).norm(), 1e-9);
}

TEST(Gauge, SingularGauge) {
  NoidPotential pot(SpaceForm::r3(), SymmetricNoid{3, 0.5});
  const XiFunction xi = [&](Complex z, Complex l) { return pot.xi_at(z, l); };
  const auto bad = gauge(xi, [](Complex, Complex) { return Mat2(Mat2::Zero()); });
  try {
    bad(Complex(0.2, 0.1), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularGauge);
  }
}

TEST(Gauge, InfinityGaugeHolomorphicAtInfinity) {
  for (int n : {3, 4, 5}) {
    NoidPotential pot(SpaceForm::r3(), SymmetricNoid{n, 0.6});
    const XiFunction xi = [&](Complex z, Complex l) { return pot.xi_at(z, l); };
    const auto a = gauge(xi, infinity_gauge, infinity_gauge_derivative);
    const Complex l = std::exp(kI * 1.1);
    // xi.g dz in the coordinate u = 1/z is bounded iff z^2 (xi.g) is bounded.
    const double n3 = (a(Complex(1e3, 0.0), l) * 1e6).norm();
    const double n4 = (a(Complex(1e4, 0.0), l) * 1e8).norm();
    EXPECT_LT(n4, 1.01 * n3 + 1e-6);
  }
}

TEST(Gauge, SymmetryMatrixTrace) {
  for (int n : {3, 4, 7}) {
    EXPECT_NEAR(std::abs(0.5 * symmetry_matrix(n).trace() - std::cos(kPi / n)), 0.0, 1e-15);
  }
}

TEST(SpaceFormTest, ClosingPointsAndCurvature) {
  EXPECT_EQ(SpaceForm::r3().closing_points().size(), 1u);
  const auto s3 = SpaceForm::s3(std::exp(kI * kPi / 4.0));
  EXPECT_NEAR(std::abs(s3.mu - std::exp(-kI * kPi / 2.0)), 0.0, 1e-15);
  EXPECT_NEAR(s3.mean_curvature(), 1.0, 1e-14);  // cot(pi/4)
  EXPECT_NEAR(SpaceForm::h3(0.5).mean_curvature(), 1.25 / 0.75, 1e-14);
  EXPECT_THROW(SpaceForm::s3(1.0), Error);
  EXPECT_THROW(SpaceForm::h3(1.2), Error);
}

TEST(Chi, Values) {
  EXPECT_DOUBLE_EQ(chi(1, 1, 1), 3.0);
  EXPECT_DOUBLE_EQ(chi(2, 1, 1), 0.0);
}
