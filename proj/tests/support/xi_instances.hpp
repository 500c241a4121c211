#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "cmcnoid/series.hpp"

// Instance generators and brute-force oracles for the graph predicates,
// shared by the unit tests and the acceptance binary.
namespace cmcnoid::fixtures {

inline SeriesMatrix random_series(std::mt19937_64& rng, int n, int k) {
  std::normal_distribution<double> g;
  std::vector<MatX> c;
  for (int d = 0; d <= k; ++d) {
    MatX m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
    c.push_back(m);
  }
  return SeriesMatrix(std::move(c));
}

/// Random series of size 1..4 and depth 0..4 with each entry zeroed through
/// the whole depth with probability 0.6.
inline SeriesMatrix random_pattern_series(std::mt19937_64& rng) {
  std::bernoulli_distribution zero_entry(0.6);
  std::uniform_int_distribution<int> dim(1, 4), trunc(0, 4);
  const int n = dim(rng);
  const int k = trunc(rng);
  SeriesMatrix a = random_series(rng, n, k);
  for (int mu = 0; mu < n; ++mu) {
    for (int nu = 0; nu < n; ++nu) {
      if (zero_entry(rng)) {
        for (int d = 0; d <= k; ++d) a.coeff(d)(mu, nu) = 0.0;
      }
    }
  }
  return a;
}

/// Brute force: a nontrivial bipartition S, S' with A_{mu nu} == 0 (to depth K)
/// whenever mu, nu lie in different blocks.
inline bool has_invariant_bipartition(const SeriesMatrix& a) {
  const int n = a.dim();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    bool ok = true;
    for (int mu = 0; mu < n && ok; ++mu) {
      for (int nu = 0; nu < n && ok; ++nu) {
        const bool same = ((mask >> mu) & 1u) == ((mask >> nu) & 1u);
        if (!same && a.entry_order(mu, nu) != kInfiniteOrder) ok = false;
      }
    }
    if (ok) return true;
  }
  return false;
}

struct IntertwinerInstance {
  SeriesMatrix a, b, x;  // X A = B X with X = diag(t^{o_i} u_i)
  bool equal_orders = false;
};

/// X = diag(t^{o_i} u_i) with unit series u_i, A irreducible, B = X A X^{-1}.
/// Entry-wise B_{mu nu} = t^{o_mu - o_nu} (u_mu / u_nu) A_{mu nu}, and
/// A_{mu nu} carries a factor t^{max(0, o_nu - o_mu)} so that B is a power
/// series. Orders are all equal (X infinitesimally invertible) or pairwise
/// distinct; A and B are returned through depth `depth`.
inline IntertwinerInstance intertwiner_instance(std::mt19937_64& rng, int n, bool equal_orders, int depth = 4) {
  constexpr int kK = 8;
  std::normal_distribution<double> g;
  auto rc = [&] { return Complex(g(rng), g(rng)); };
  std::vector<int> o(n);
  for (int i = 0; i < n; ++i) o[i] = equal_orders ? 1 : i;
  if (!equal_orders) std::shuffle(o.begin(), o.end(), rng);
  std::vector<std::vector<Complex>> u(n, std::vector<Complex>(kK + 1));
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d <= kK; ++d) u[i][d] = d == 0 ? Complex(1.0 + i, 0.5) : 0.3 * rc();
  }
  SeriesMatrix a(n, kK), b(n, kK), x(n, kK);
  for (int i = 0; i < n; ++i) x.coeff(o[i])(i, i) = 1.0;
  for (int mu = 0; mu < n; ++mu) {
    for (int nu = 0; nu < n; ++nu) {
      const int lift = std::max(0, o[nu] - o[mu]);
      std::vector<Complex> amn(kK + 1, 0.0);
      for (int d = lift; d <= kK; ++d) amn[d] = rc();
      std::vector<Complex> ratio(kK + 1, 0.0);  // u_mu / u_nu
      for (int d = 0; d <= kK; ++d) {
        Complex acc = u[mu][d];
        for (int i = 1; i <= d; ++i) acc -= u[nu][i] * ratio[d - i];
        ratio[d] = acc / u[nu][0];
      }
      const auto prod = scalar_series::mul(ratio, amn);
      const int shift = o[mu] - o[nu];
      for (int d = 0; d <= kK; ++d) {
        a.coeff(d)(mu, nu) = amn[d];
        const int src = d - shift;
        if (src >= 0 && src <= kK) b.coeff(d)(mu, nu) = prod[src];
      }
    }
  }
  // B is only known through depth K - max shift; truncate both.
  std::vector<MatX> ca, cb;
  for (int d = 0; d <= depth; ++d) {
    ca.push_back(a.coeff(d));
    cb.push_back(b.coeff(d));
  }
  return {SeriesMatrix(ca), SeriesMatrix(cb), x, equal_orders};
}

}  // namespace cmcnoid::fixtures
