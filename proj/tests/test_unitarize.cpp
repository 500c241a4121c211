#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cmcnoid/error.hpp"
#include "cmcnoid/unitarize.hpp"

using namespace cmcnoid;

namespace {

Mat2 su2(double a, double b, double c) {
  Mat2 u;
  u << std::exp(kI * a) * std::cos(b), std::exp(kI * c) * std::sin(b), -std::exp(-kI * c) * std::sin(b),
      std::exp(-kI * a) * std::cos(b);
  return u;
}

MatX random_special(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatX m(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m / std::sqrt(m.determinant());
}

MatX random_unitary(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  return su2(u(rng), u(rng), u(rng));
}

// Smooth SU(2) loop with random Fourier-mode parameters.
LoopMatrix random_unitary_loop(const CircleGrid& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a0 = u(rng), a1 = u(rng), b0 = 0.4 + 0.3 * u(rng), b1 = 0.2 * u(rng), c0 = u(rng), c1 = u(rng);
  return LoopMatrix::from_function(grid, 2, [&](Complex l) {
    const double t = std::arg(l);
    return MatX(su2(a0 + a1 * std::cos(t), b0 + b1 * std::sin(t), c0 + c1 * std::sin(2.0 * t)));
  });
}

// Special loop C = A (id + 0.3 lambda N) with N nilpotent and A constant.
LoopMatrix random_special_loop(const CircleGrid& grid, std::mt19937_64& rng) {
  const MatX a = random_special(rng);
  return LoopMatrix::from_function(grid, 2, [&](Complex l) {
    MatX n = MatX::Identity(2, 2);
    n(0, 1) = 0.3 * l + 0.2 / l;
    return MatX(a * n);
  });
}

double max_unitarity_defect(const LoopMatrix& u) {
  double m = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const MatX uj = u[j];
    m = std::max(m, (uj.adjoint() * uj - MatX::Identity(2, 2)).norm());
  }
  return m;
}

MonodromySet trinoid_set(std::size_t n = 256) {
  return build_monodromy_set(NoidPotential(SpaceForm::r3(), Trinoid{0.75, 0.75, 0.75}), CircleGrid(n));
}

}  // namespace

TEST(Goldman, ScalarValues) {
  EXPECT_DOUBLE_EQ(goldman_T(1.0, 1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(goldman_T(0.0, 0.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(goldman_T(0.5, 0.5, 0.5), 1.0 - 0.75 + 0.25);
}

TEST(Goldman, LoopVerdictsAndImaginaryTraces) {
  const ScalarLoop one(4, 1.0), zero(4, 0.0);
  ScalarLoop mixed = {0.0, 1.0, Complex(0.0, 1e-6), 0.0};
  auto r = goldman_T(one, one, one);
  EXPECT_EQ(r.zero_set.size(), 4u);
  EXPECT_EQ(r.verdicts[2], Verdict::Reducible);
  auto z = goldman_T(zero, zero, mixed);
  EXPECT_EQ(z.verdicts[0], Verdict::Unitarizable);
  EXPECT_EQ(z.verdicts[1], Verdict::Reducible);  // 1 - 1 = 0
  ASSERT_TRUE(z.first_non_real.has_value());
  EXPECT_EQ(*z.first_non_real, 2u);
  // t = (0.9, -0.9, 0.9) gives T < 0.
  ScalarLoop a = {0.9}, b = {-0.9};
  EXPECT_EQ(goldman_T(a, b, a).verdicts[0], Verdict::NotUnitarizable);
}

TEST(Goldman, SymmetricNoidClosedForm) {
  for (int n : {3, 5}) {
    auto ms = build_monodromy_set(NoidPotential(SpaceForm::r3(), SymmetricNoid{n, 0.5}), CircleGrid(64));
    const auto rep = goldman_report(ms);
    const auto t0 = trace_loop(ms, 0);
    const double c = std::cos(2.0 * kPi / n);
    for (std::size_t j = 0; j < t0.size(); ++j) {
      const double t = t0[j].real();
      EXPECT_NEAR(rep.T[j], (1.0 - t) * (t - c), 1e-9);
    }
  }
}

TEST(Goldman, CommutatorDeterminantIsFourT) {
  auto ms = trinoid_set(128);
  const auto triple = ms.unitarization_triple();
  const auto rep = goldman_report(ms);
  const auto d = det(commutator(triple[0], triple[1]));
  for (std::size_t j = 0; j < d.size(); ++j) {
    EXPECT_LT(std::abs(d[j] - 4.0 * rep.T[j]), 1e-7);
    if (j > 8 && j < d.size() - 8) EXPECT_GT(rep.T[j], 0.0);
  }
  EXPECT_LT(std::abs(rep.T[0]), 1e-7);
  EXPECT_FALSE(rep.first_not_unitarizable().has_value());
}

TEST(Admissibility, TrinoidExamples) {
  auto ok = trinoid_admissible({0.75, 0.75, 0.75}, SpaceForm::r3());
  EXPECT_TRUE(ok.admissible());
  // Oracle: rho_w(-1) = (1 - sqrt(1 - w)) / 2 at lambda0 = 1, so n_k = 1/4.
  for (const auto& c : ok.checks) {
    if (c.id == "n_sum") EXPECT_NEAR(c.lhs, 0.75, 1e-15);
  }
  auto bad = trinoid_admissible({2.0, 0.5, 0.5}, SpaceForm::r3());
  EXPECT_FALSE(bad.admissible());
  bool weight_fails = false;
  for (const auto& c : bad.checks) weight_fails = weight_fails || (c.id == "w_triangle_0" && !c.holds);
  EXPECT_TRUE(weight_fails);
  // n = (1/2, 1/4, 1/4) sums to 1 exactly: the strict inequality fails.
  auto edge = trinoid_admissible({1.0, 0.75, 0.75}, SpaceForm::r3());
  EXPECT_FALSE(edge.admissible());
  EXPECT_EQ(edge.first_failure(), "n_sum");
}

TEST(Admissibility, NonEuclideanFormsCheckBothSymPoints) {
  auto rep = trinoid_admissible({0.5, 0.6, 0.7}, SpaceForm::s3(std::exp(kI * kPi / 4.0)));
  bool has_m = false;
  for (const auto& c : rep.checks) has_m = has_m || c.id == "m_sum";
  EXPECT_TRUE(has_m);
  EXPECT_TRUE(rep.admissible());
  EXPECT_TRUE(trinoid_admissible({0.5, 0.6, 0.7}, SpaceForm::h3(0.4)).admissible());
}

TEST(Admissibility, SymmetricNoidExamples) {
  EXPECT_TRUE(nnoid_admissible({3, 0.75}, SpaceForm::r3()).admissible());
  auto five = nnoid_admissible({5, 0.75}, SpaceForm::r3());
  EXPECT_FALSE(five.admissible());
  EXPECT_EQ(five.first_failure(), "rho_minus");
  for (int n : {3, 4, 7}) EXPECT_FALSE(nnoid_admissible({n, 1.0}, SpaceForm::r3()).admissible());
  EXPECT_TRUE(nnoid_admissible({5, 0.5}, SpaceForm::r3()).admissible());
}

TEST(OperatorL, UnitaryAndConjugatedKernels) {
  std::mt19937_64 rng(11);
  std::vector<MatX> us = {random_unitary(rng), random_unitary(rng), random_unitary(rng)};
  for (const auto& d : L_apply(MatX::Identity(2, 2), us)) EXPECT_LT(d.norm(), 1e-14);
  const MatX c = random_special(rng);
  std::vector<MatX> ms;
  for (const auto& u : us) ms.push_back(c.inverse() * u * c);
  for (const auto& d : L_apply(c.adjoint() * c, ms)) EXPECT_LT(d.norm(), 1e-12);
  // Random X gives a nonzero defect; the flattened operator agrees with L_apply.
  const MatX x = random_special(rng);
  const MatX flat = flatten_L(ms);
  VecX vx(4);
  for (int e = 0; e < 4; ++e) vx(e) = x(e % 2, e / 2);
  const VecX lv = flat * vx;
  const auto lx = L_apply(x, ms);
  double nonzero = 0.0;
  for (std::size_t k = 0; k < ms.size(); ++k) {
    for (int e = 0; e < 4; ++e) EXPECT_LT(std::abs(lv(static_cast<Eigen::Index>(k) * 4 + e) - lx[k](e % 2, e / 2)), 1e-12);
    nonzero = std::max(nonzero, lx[k].norm());
  }
  EXPECT_GT(nonzero, 1e-3);
  // Linearity, hence continuity under perturbation.
  const MatX e = 1e-6 * random_special(rng);
  const auto le = L_apply(x + e, ms);
  const auto de = L_apply(e, ms);
  for (std::size_t k = 0; k < ms.size(); ++k) EXPECT_LT((le[k] - lx[k] - de[k]).norm(), 1e-13);
}

TEST(OperatorL, AdjointAndConjugationCovariance) {
  std::mt19937_64 rng(12);
  const MatX c = random_special(rng);
  std::vector<MatX> ms;
  for (int k = 0; k < 2; ++k) ms.push_back(c.inverse() * random_unitary(rng) * c);
  // A non-Hermitian kernel element: complex multiple of C* C.
  const MatX x = Complex(0.3, 0.8) * (c.adjoint() * c);
  for (const auto& d : L_apply(MatX(x.adjoint()), ms)) EXPECT_LT(d.norm(), 1e-12);
  const MatX e = 1e-5 * random_special(rng);
  double lhs = 0.0, rhs = 0.0;
  for (const auto& d : L_apply(MatX(x + e), ms)) lhs = std::max(lhs, d.norm());
  for (const auto& d : L_apply(MatX((x + e).adjoint()), ms)) rhs = std::max(rhs, d.norm());
  EXPECT_LT(rhs, 20.0 * lhs);
  // Kernel of the conjugated tuple M~ = D M D^{-1} maps to the kernel of L by D* X D.
  const MatX dm = random_special(rng);
  std::vector<MatX> conj;
  for (const auto& m : ms) conj.push_back(dm * m * dm.inverse());
  Eigen::JacobiSVD<MatX> svd(flatten_L(conj), Eigen::ComputeFullV);
  const VecX v = svd.matrixV().col(3);
  MatX xt(2, 2);
  for (int i = 0; i < 4; ++i) xt(i % 2, i / 2) = v(i);
  for (const auto& d : L_apply(MatX(dm.adjoint() * xt * dm), ms)) EXPECT_LT(d.norm(), 1e-10);
}

TEST(Cholesky, HandExamples) {
  CircleGrid grid(8);
  auto check = [&](const MatX& x, const MatX& expected) {
    auto v = cholesky_loop(LoopMatrix::constant(grid, x));
    EXPECT_LT((MatX(v[3]) - expected).norm(), 1e-14);
    EXPECT_LT((MatX(v[3]).adjoint() * MatX(v[3]) - x).norm(), 1e-14);
  };
  check(MatX::Identity(2, 2), MatX::Identity(2, 2));
  MatX d = MatX::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 0.25;
  MatX dv = MatX::Zero(2, 2);
  dv(0, 0) = 2.0;
  dv(1, 1) = 0.5;
  check(d, dv);
  MatX x(2, 2), v(2, 2);
  x << 2.0, 1.0, 1.0, 1.0;
  v << std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0);
  check(x, v);
}

TEST(Cholesky, RejectsIndefiniteAndIsUniqueUpToUnitary) {
  CircleGrid grid(8);
  MatX bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  try {
    cholesky_loop(LoopMatrix::constant(grid, bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPositiveDefinite);
  }
  std::mt19937_64 rng(13);
  auto w = random_special_loop(grid, rng);
  auto v = cholesky_loop(mul(star(w), w));
  EXPECT_TRUE(v.special(1e-12));
  // W V^{-1} is unitary and V has a positive real diagonal.
  EXPECT_LT(max_unitarity_defect(mul(w, inv(v))), 1e-12);
  for (std::size_t j = 0; j < v.size(); ++j) {
    EXPECT_GT(v[j](0, 0).real(), 0.0);
    EXPECT_EQ(v[j](1, 0), Complex(0.0));
    EXPECT_EQ(v[j](1, 1).imag(), 0.0);
  }
}

TEST(Kernel, UnitaryGeneratorsGiveIdentity) {
  std::mt19937_64 rng(14);
  CircleGrid grid(64);
  std::vector<LoopMatrix> us = {random_unitary_loop(grid, rng), random_unitary_loop(grid, rng)};
  auto r = unitarize(us, {"U0", "U1"});
  EXPECT_LT(max_distance(r.X, LoopMatrix::constant(grid, MatX::Identity(2, 2))), 1e-10);
  EXPECT_LT(r.max_residual(), 1e-10);
  EXPECT_TRUE(r.kernel.degenerate.empty());
}

TEST(Kernel, KnownAnswerConjugatedFixture) {
  CircleGrid grid(64);
  for (std::uint64_t seed : {15u, 16u, 17u}) {
    const auto fx = conjugated_unitary_fixture(grid, seed);
    const auto ci = inv(fx.C);
    for (std::size_t k = 0; k < fx.generators.size(); ++k) {
      EXPECT_LT(max_unitarity_defect(fx.unitary[k]), 1e-12);
      EXPECT_LT(max_distance(mul(mul(fx.C, fx.generators[k]), ci), fx.unitary[k]), 1e-10);
    }
    auto r = unitarize(fx.generators, fx.names);
    // Oracle: X = C* C (det 1 already), and V C^{-1} is unitary.
    EXPECT_LT(max_distance(r.X, mul(star(fx.C), fx.C)), 1e-7);
    EXPECT_LT(max_unitarity_defect(mul(r.V, ci)), 1e-7);
    EXPECT_LT(r.max_residual(), 1e-7);
    EXPECT_LT(r.coverage_residual, 1e-7);
    ASSERT_TRUE(r.C_plus.has_value());
    EXPECT_LT(r.max_residual_c_plus(), 1e-7);
    for (const auto& d : det(r.X)) EXPECT_NEAR(std::abs(d - 1.0), 0.0, 1e-12);
  }
}

TEST(Kernel, CommutingGeneratorsHaveLargeKernel) {
  CircleGrid grid(32);
  auto diag = [&](double s) {
    return LoopMatrix::from_function(grid, 2, [&](Complex l) {
      MatX d = MatX::Zero(2, 2);
      d(0, 0) = std::exp(kI * (s + 0.1 * std::arg(l)));
      d(1, 1) = std::conj(d(0, 0));
      return d;
    });
  };
  try {
    kernel_loop({diag(0.3), diag(1.1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::KernelDimensionHigh);
  }
}

TEST(Unitarize, TrinoidEndToEnd) {
  auto ms = trinoid_set();
  auto r = unitarize(ms);
  EXPECT_LT(r.max_residual(), 1e-5);
  EXPECT_LT(r.max_residual_c_plus(), 1e-5);
  EXPECT_LE(r.kernel.degenerate.size(), 5u);
  for (std::size_t j = 0; j < r.X.size(); ++j) {
    const MatX x = r.X[j];
    EXPECT_LT((x - x.adjoint()).norm(), 1e-8);
    Eigen::SelfAdjointEigenSolver<MatX> es(x);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    const MatX v = r.V[j];
    EXPECT_LT((v.adjoint() * v - x).norm(), 1e-9);
  }
}

TEST(Unitarize, SymmetricNoidEndToEnd) {
  auto ms = build_monodromy_set(NoidPotential(SpaceForm::r3(), SymmetricNoid{5, 0.5}), CircleGrid(128));
  auto r = unitarize(ms);
  EXPECT_LT(r.max_residual(), 1e-5);
  EXPECT_LT(r.coverage_residual, 1e-5);
}

TEST(Unitarize, SeedIndependenceUpToUnitary) {
  auto ms = trinoid_set(128);
  UnitarizeOptions a, b;
  a.seed = 1;
  b.seed = 2;
  auto ra = unitarize(ms, a);
  auto rb = unitarize(ms, b);
  EXPECT_LT(max_unitarity_defect(mul(rb.V, inv(ra.V))), 1e-7);
}

TEST(Hypotheses, TrinoidAtOne) {
  auto rep = verify_hypotheses(trinoid_set(128));
  ASSERT_EQ(rep.identities.size(), 1u);
  EXPECT_LT(rep.identities[0].relative_error, 1e-3);
  EXPECT_LT(std::abs(rep.identities[0].jet - rep.identities[0].expected) / std::abs(rep.identities[0].expected),
            1e-3);
  EXPECT_TRUE(rep.all_hold());
  EXPECT_NEAR(rep.chi, 2.25 * 0.75 * 0.75 * 0.75, 1e-15);
  EXPECT_LT(rep.goldman_consistency, 1e-7);
}

TEST(Hypotheses, SymmetricNoidAtOne) {
  auto ms = build_monodromy_set(NoidPotential(SpaceForm::r3(), SymmetricNoid{5, 0.5}), CircleGrid(64));
  auto rep = verify_hypotheses(ms);
  ASSERT_EQ(rep.identities.size(), 1u);
  EXPECT_LT(rep.identities[0].relative_error, 1e-3);
  EXPECT_TRUE(rep.all_hold());
}

TEST(Hypotheses, OffUnitSymPoints) {
  for (const auto& form : {SpaceForm::s3(std::exp(kI * kPi / 4.0)), SpaceForm::h3(0.4)}) {
    for (const NoidVariant v : {NoidVariant(Trinoid{0.5, 0.6, 0.7}), NoidVariant(SymmetricNoid{3, 0.4})}) {
      auto rep = verify_hypotheses(build_monodromy_set(NoidPotential(form, v), CircleGrid(64)));
      EXPECT_EQ(rep.identities.size(), 2u);
      EXPECT_TRUE(rep.all_hold());
    }
  }
}

TEST(Hypotheses, BinomialAndChi) {
  EXPECT_EQ(binomial(4, 2), 6.0);
  EXPECT_EQ(binomial(8, 4), 70.0);
  EXPECT_EQ(binomial(2, 1), 2.0);
  EXPECT_EQ(chi(1.0, 1.0, 1.0), 3.0);
  EXPECT_EQ(chi(2.0, 1.0, 1.0), 0.0);
}
