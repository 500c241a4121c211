#include <gtest/gtest.h>

#include <random>

#include "cmcnoid/error.hpp"
#include "cmcnoid/series.hpp"
#include "support/xi_instances.hpp"

using namespace cmcnoid;
using cmcnoid::fixtures::has_invariant_bipartition;
using cmcnoid::fixtures::random_series;

namespace {

constexpr int kK = 8;

SeriesMatrix zero(int n, int k = kK) { return SeriesMatrix(n, k); }

MatX random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  MatX m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return m;
}

SeriesMatrix series_2x2(std::initializer_list<std::pair<int, MatX>> terms, int k = kK) {
  SeriesMatrix s = zero(2, k);
  for (const auto& [d, m] : terms) s.coeff(d) += m;
  return s;
}

MatX m2(Complex a, Complex b, Complex c, Complex d) {
  MatX m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST(EntryOrder, IdentityHasOrderZero) {
  auto a = SeriesMatrix::identity(2, kK);
  EXPECT_EQ(entry_order(a, 0, 0), 0);
}

TEST(EntryOrder, Monomial) {
  auto a = SeriesMatrix::identity(2, kK);
  a.coeff(3)(0, 1) = 1.0;
  EXPECT_EQ(entry_order(a, 0, 1), 3);
}

TEST(EntryOrder, ZeroedEntryIsInfinite) {
  std::mt19937_64 rng(1);
  auto a = random_series(rng, 3, kK);
  for (int d = 0; d <= kK; ++d) a.coeff(d)(1, 2) = 0.0;
  EXPECT_EQ(entry_order(a, 1, 2), kInfiniteOrder);
  try {
    entry_order(a, 1, 2, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncationExhausted);
  }
}

TEST(EntryOrder, NoiseBelowRelativeToleranceIgnored) {
  auto a = SeriesMatrix::identity(2, kK);
  a.coeff(0)(0, 1) = 1e-13;
  a.coeff(2)(0, 1) = 0.5;
  EXPECT_EQ(entry_order(a, 0, 1), 2);
}

TEST(Graph, NonzeroAndCompatible) {
  auto id = SeriesMatrix::identity(2, kK);
  EXPECT_TRUE(g_nonzero(id, XiGraph(2, {{0, 0}})));
  EXPECT_FALSE(g_nonzero(id, XiGraph(2, {{0, 1}})));

  auto a = zero(2), b = zero(2), c = zero(2);
  a.coeff(2)(0, 1) = 1.0;
  b.coeff(2)(0, 1) = 1.0;
  c.coeff(3)(0, 1) = 1.0;
  EXPECT_TRUE(g_compatible(a, b, XiGraph(2, {{0, 1}})));
  EXPECT_FALSE(g_compatible(a, c, XiGraph(2, {{0, 1}})));
}

TEST(Graph, NoDuplicateEdgesAndUndirectedConnectivity) {
  XiGraph g(3, {{0, 1}, {0, 1}, {2, 1}});
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_TRUE(g.connected());
  XiGraph h(3, {{0, 1}, {2, 2}});
  EXPECT_FALSE(h.connected());
}

TEST(Reducibility, Diagonal) {
  auto a = series_2x2({{0, m2(1, 0, 0, 2)}, {1, m2(3, 0, 0, 1)}});
  auto p = reducibility_block_test(a);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->first, std::vector<int>{0});
  EXPECT_EQ(p->second, std::vector<int>{1});
}

TEST(Reducibility, FullGraphIsIrreducible) {
  auto a = series_2x2({{0, m2(1, 2, 3, 4)}});
  EXPECT_FALSE(reducibility_block_test(a).has_value());
}

TEST(Reducibility, BlockDiagonalTwoPlusOne) {
  std::mt19937_64 rng(3);
  auto a = random_series(rng, 3, 4);
  for (int d = 0; d <= 4; ++d) {
    a.coeff(d)(0, 2) = a.coeff(d)(1, 2) = a.coeff(d)(2, 0) = a.coeff(d)(2, 1) = 0.0;
  }
  auto p = reducibility_block_test(a);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->first, (std::vector<int>{0, 1}));
  EXPECT_EQ(p->second, std::vector<int>{2});
  EXPECT_TRUE(has_invariant_bipartition(a));
}

TEST(Reducibility, AgreesWithBruteForceOnRandomPatterns) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 400; ++trial) {
    const auto a = fixtures::random_pattern_series(rng);
    EXPECT_EQ(reducibility_block_test(a).has_value(), has_invariant_bipartition(a));
  }
}

TEST(Invertible, ScalarT) {
  auto x = zero(2);
  x.coeff(1) = MatX::Identity(2, 2);
  auto rep = infinitesimally_invertible(x);
  EXPECT_TRUE(rep.invertible);
  EXPECT_EQ(rep.order, 1);
  EXPECT_LT((rep.leading - MatX::Identity(2, 2)).norm(), 1e-15);
}

TEST(Invertible, DiagOneT) {
  auto x = series_2x2({{0, m2(1, 0, 0, 0)}, {1, m2(0, 0, 0, 1)}});
  EXPECT_FALSE(infinitesimally_invertible(x).invertible);
}

TEST(Invertible, TSquaredTimesRandomInvertible) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    MatX c = random_matrix(rng, 3);
    auto x = zero(3);
    x.coeff(2) = c;
    x.coeff(3) = random_matrix(rng, 3);
    auto rep = infinitesimally_invertible(x);
    EXPECT_EQ(rep.order, 2);
    EXPECT_EQ(rep.invertible, numerical_rank(c, 1e-8) == 3);
  }
}

TEST(Invertible, RefusesInsufficientTruncation) {
  auto x = zero(2, 4);
  x.coeff(3) = MatX::Identity(2, 2);
  EXPECT_THROW(infinitesimally_invertible(x), Error);
}

TEST(Diagonalizable, AlreadyDiagonal) {
  auto m = series_2x2({{0, m2(1, 0, 0, 1)}, {1, m2(1, 0, 0, -1)}});
  EXPECT_TRUE(locally_diagonalizable(m));
}

TEST(Diagonalizable, JordanPlusDiagonalPerturbation) {
  // Oracle: eigenvalues 1 +- t exactly, M - (1+t) id = [[0,1],[0,-2t]] has order 0.
  auto m = series_2x2({{0, m2(1, 1, 0, 1)}, {1, m2(1, 0, 0, -1)}});
  EXPECT_FALSE(locally_diagonalizable(m));
}

TEST(Diagonalizable, IdentityPlusHermitianTraceless) {
  // Oracle: id + t H with H Hermitian traceless has eigenvalues 1 +- t|h| and
  // M - mu1 id = t (H - |h| id), order 1 = ord(2 t |h|).
  auto m = series_2x2({{0, m2(1, 0, 0, 1)}, {1, m2(0.3, Complex(0.2, -0.5), Complex(0.2, 0.5), -0.3)}});
  EXPECT_TRUE(locally_diagonalizable(m));
}

TEST(Diagonalizable, OddDiscriminantOrderIsNonAnalytic) {
  // [[1, 1],[t, 1]]: discriminant t, odd order.
  auto m = series_2x2({{0, m2(1, 1, 0, 1)}, {1, m2(0, 0, 1, 0)}});
  try {
    locally_diagonalizable(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonAnalyticEigenvalues);
  }
}

TEST(Diagonalizable, ScalarSeriesRejected) {
  auto m = series_2x2({{0, m2(1, 0, 0, 1)}, {2, m2(3, 0, 0, 3)}});
  EXPECT_THROW(locally_diagonalizable(m), Error);
}

TEST(Irreducible, DiagonalConstantWithFullOffDiagonal) {
  auto a = SeriesMatrix::constant(m2(2, 0, 0, 0.5), kK);
  auto b = series_2x2({{0, m2(0.1, 1.0, 2.0, 0.3)}});
  EXPECT_TRUE(infinitesimally_irreducible(a, b));
}

TEST(Irreducible, CommutingDiagonalsExhaustTruncation) {
  auto a = series_2x2({{0, m2(2, 0, 0, 0.5)}, {1, m2(1, 0, 0, 3)}});
  auto b = series_2x2({{0, m2(1, 0, 0, 4)}});
  try {
    infinitesimally_irreducible(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncationExhausted);
  }
}

TEST(Irreducible, UnequalOffDiagonalOrders) {
  // [diag(a1,a2), B] has off-diagonal entries (a1-a2) B12 and -(a1-a2) B21,
  // so the leading coefficient at t^1 is (a1-a2) b E12, rank 1.
  auto a = SeriesMatrix::constant(m2(2, 0, 0, 0.5), kK);
  auto b = series_2x2({{0, m2(1, 0, 0, 1)}, {1, m2(0, 1, 0, 0)}, {2, m2(0, 0, 1, 0)}});
  EXPECT_FALSE(infinitesimally_irreducible(a, b));
}

TEST(Irreducible, ConjugationInvariant) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    auto a = SeriesMatrix::constant(m2(2, 0, 0, 0.5), kK);
    auto b = zero(2);
    std::uniform_int_distribution<int> ord(0, 3);
    const int o12 = ord(rng), o21 = ord(rng);
    b.coeff(o12)(0, 1) = Complex(1.0, 0.5);
    b.coeff(o21)(1, 0) = Complex(-0.7, 0.2);
    b.coeff(0)(0, 0) = 1.0;
    MatX c = random_matrix(rng, 2);
    auto cs = SeriesMatrix::constant(c, kK);
    auto ci = SeriesMatrix::constant(c.inverse(), kK);
    const bool direct = infinitesimally_irreducible(a, b);
    EXPECT_EQ(direct, o12 == o21);
    EXPECT_EQ(infinitesimally_irreducible(cs * a * ci, cs * b * ci), direct);
  }
}

TEST(Compatibility, DiagonalIntertwinerEquivalence) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = fixtures::intertwiner_instance(rng, 2 + trial % 3, trial % 2 == 0);
    EXPECT_FALSE(reducibility_block_test(inst.a).has_value());
    EXPECT_EQ(infinitesimally_invertible(inst.x).invertible, inst.equal_orders);
    EXPECT_EQ(exists_connected_compatible_graph(inst.a, inst.b), inst.equal_orders);
  }
}

TEST(Arithmetic, ProductOrderSubadditivity) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ord(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_series(rng, 3, 6);
    auto b = random_series(rng, 3, 6);
    for (int mu = 0; mu < 3; ++mu) {
      for (int nu = 0; nu < 3; ++nu) {
        const int oa = ord(rng), ob = ord(rng);
        for (int d = 0; d < oa; ++d) a.coeff(d)(mu, nu) = 0.0;
        for (int d = 0; d < ob; ++d) b.coeff(d)(mu, nu) = 0.0;
      }
    }
    auto p = a * b;
    for (int mu = 0; mu < 3; ++mu) {
      for (int nu = 0; nu < 3; ++nu) {
        int bound = kInfiniteOrder;
        for (int k = 0; k < 3; ++k) {
          const int oa = a.entry_order(mu, k), ob = b.entry_order(k, nu);
          if (oa != kInfiniteOrder && ob != kInfiniteOrder) bound = std::min(bound, oa + ob);
        }
        EXPECT_GE(p.entry_order(mu, nu), std::min(bound, p.truncation() + 1) == p.truncation() + 1
                                             ? 0
                                             : std::min(bound, p.truncation() + 1));
        // Direct multiplication of the truncated scalar series agrees.
        std::vector<Complex> acc(7, 0.0);
        for (int k = 0; k < 3; ++k) {
          std::vector<Complex> x(7), y(7);
          for (int d = 0; d <= 6; ++d) {
            x[d] = a.coeff(d)(mu, k);
            y[d] = b.coeff(d)(k, nu);
          }
          auto xy = scalar_series::mul(x, y);
          for (int d = 0; d <= 6; ++d) acc[d] += xy[d];
        }
        for (int d = 0; d <= 6; ++d) EXPECT_LT(std::abs(acc[d] - p.coeff(d)(mu, nu)), 1e-12);
      }
    }
  }
}

TEST(Arithmetic, InverseSeries) {
  std::mt19937_64 rng(9);
  auto x = random_series(rng, 2, kK);
  x.coeff(0) += 4.0 * MatX::Identity(2, 2);
  auto y = inverse(x);
  auto p = x * y;
  EXPECT_LT((p.coeff(0) - MatX::Identity(2, 2)).norm(), 1e-12);
  for (int d = 1; d <= kK; ++d) EXPECT_LT(p.coeff(d).norm(), 1e-10);
}

TEST(ScalarSeries, SquareRoot) {
  // sqrt(t^2 (1 + t)^2) = t (1 + t)
  std::vector<Complex> a(9, 0.0);
  a[2] = 1.0;
  a[3] = 2.0;
  a[4] = 1.0;
  int valid = 0;
  auto s = scalar_series::sqrt(a, 1e-12, &valid);
  EXPECT_NEAR(std::abs(s[1] - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(s[2] - 1.0), 0.0, 1e-14);
  for (int d = 3; d <= valid; ++d) EXPECT_NEAR(std::abs(s[d]), 0.0, 1e-14);
  EXPECT_EQ(valid, 7);
}

TEST(FiniteDifferenceSeries, RecoversTaylorCoefficients) {
  auto f = [](double t) {
    MatX m(2, 2);
    m << std::exp(t), std::sin(t), t * t * t, 1.0;
    return m;
  };
  auto s = series_from_samples(f, 0.0, 4, 0.05, 6);
  EXPECT_NEAR(std::abs(s.coeff(2)(0, 0) - 0.5), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(s.coeff(3)(0, 1) + 1.0 / 6.0), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(s.coeff(3)(1, 0) - 1.0), 0.0, 1e-8);
}
