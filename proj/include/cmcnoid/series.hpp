#pragma once

#include <limits>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "cmcnoid/types.hpp"

namespace cmcnoid {

/// Vanishing order of a series that is zero through its truncation depth.
inline constexpr int kInfiniteOrder = std::numeric_limits<int>::max();

/// Matrix of truncated power series sum_{d=0}^{K} C_d t^d in a local real
/// coordinate t at a point. Orders are read off against a noise threshold
/// order_tol * reference magnitude, where the reference magnitude is the
/// larger of the matrix's own largest coefficient and the scale inherited
/// from the operands it was computed from.
class SeriesMatrix {
 public:
  static constexpr double kDefaultOrderTol = 1e-9;
  static constexpr int kDefaultTruncation = 8;

  SeriesMatrix(int dim, int truncation, double order_tol = kDefaultOrderTol);
  explicit SeriesMatrix(std::vector<MatX> coeffs, double order_tol = kDefaultOrderTol);

  static SeriesMatrix constant(const MatX& value, int truncation, double order_tol = kDefaultOrderTol);
  static SeriesMatrix identity(int dim, int truncation, double order_tol = kDefaultOrderTol);

  int dim() const noexcept { return dim_; }
  int truncation() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  double order_tol() const noexcept { return order_tol_; }
  void set_order_tol(double tol) noexcept { order_tol_ = tol; }

  const MatX& coeff(int d) const { return coeffs_.at(static_cast<std::size_t>(d)); }
  MatX& coeff(int d) { return coeffs_.at(static_cast<std::size_t>(d)); }
  const std::vector<MatX>& coeffs() const noexcept { return coeffs_; }

  double magnitude() const;
  double reference_scale() const noexcept { return reference_scale_; }
  void set_reference_scale(double s) noexcept { reference_scale_ = s; }
  double threshold() const;

  /// Smallest d with |C_d(mu, nu)| above threshold, or kInfiniteOrder.
  int entry_order(int mu, int nu) const;
  /// Minimum entry order over the whole matrix.
  int order() const;

  /// Series of the entry (mu, nu) as a dim-1 matrix series.
  SeriesMatrix entry(int mu, int nu) const;
  /// Coefficientwise conjugate transpose; valid for a real coordinate t.
  SeriesMatrix adjoint() const;
  /// Evaluates the truncated series at t.
  MatX evaluate(double t) const;

  friend SeriesMatrix operator+(const SeriesMatrix& a, const SeriesMatrix& b);
  friend SeriesMatrix operator-(const SeriesMatrix& a, const SeriesMatrix& b);
  friend SeriesMatrix operator*(const SeriesMatrix& a, const SeriesMatrix& b);
  friend SeriesMatrix operator*(Complex s, const SeriesMatrix& a);

 private:
  int dim_;
  double order_tol_;
  double reference_scale_ = 0.0;
  std::vector<MatX> coeffs_;
};

SeriesMatrix commutator(const SeriesMatrix& a, const SeriesMatrix& b);
/// Inverse by the recursion Y_k = -Y_0 sum_{i=1}^k X_i Y_{k-i}; needs X_0 invertible.
SeriesMatrix inverse(const SeriesMatrix& x);
/// Truncated Taylor series of f around t0 from central finite differences.
template <class Fn>
SeriesMatrix series_from_samples(Fn&& f, double t0, int truncation, double h, int half_width,
                                 double order_tol = SeriesMatrix::kDefaultOrderTol);

/// Directed graph on {0..n-1}; no duplicate edges, self-loops allowed.
class XiGraph {
 public:
  explicit XiGraph(int n) : n_(n) {}
  XiGraph(int n, std::initializer_list<std::pair<int, int>> edges);

  int size() const noexcept { return n_; }
  void add_edge(int from, int to);
  const std::set<std::pair<int, int>>& edges() const noexcept { return edges_; }
  /// Connectivity of the underlying undirected graph.
  bool connected() const;
  /// Connected components of the underlying undirected graph.
  std::vector<std::vector<int>> components() const;

 private:
  int n_;
  std::set<std::pair<int, int>> edges_;
};

/// Order of entry (mu, nu); throws TruncationExhausted when the entry
/// vanishes through the truncation depth and require_finite is set.
int entry_order(const SeriesMatrix& a, int mu, int nu, bool require_finite = false);
bool g_nonzero(const SeriesMatrix& a, const XiGraph& g);
bool g_compatible(const SeriesMatrix& a, const SeriesMatrix& b, const XiGraph& g);

/// Largest graph for which a is non-zero (every finite-order entry is an edge).
XiGraph maximal_nonzero_graph(const SeriesMatrix& a);
/// Largest graph on which a and b are compatible.
XiGraph maximal_compatible_graph(const SeriesMatrix& a, const SeriesMatrix& b);
/// True iff a and b are G-compatible for some connected graph G.
bool exists_connected_compatible_graph(const SeriesMatrix& a, const SeriesMatrix& b);

using Partition = std::pair<std::vector<int>, std::vector<int>>;
/// A nontrivial partition with all cross-block entries vanishing to depth K,
/// or nullopt when the maximal non-zero graph is connected.
std::optional<Partition> reducibility_block_test(const SeriesMatrix& a);

struct InvertibilityReport {
  bool invertible = false;
  int order = kInfiniteOrder;
  MatX leading;
};
InvertibilityReport infinitesimally_invertible(const SeriesMatrix& x, double rank_tol = 1e-8);

/// 2x2 only: eigenlines of M are non-coincident at the point, decided by
/// ord(mu1 - mu2) == ord(M - mu1 id) with eigenvalue series from
/// trace/determinant. Throws NonAnalyticEigenvalues for an odd-order
/// discriminant.
bool locally_diagonalizable(const SeriesMatrix& m);

/// 2x2 only: the leading coefficient of [A, B] has rank 2. Throws
/// TruncationExhausted when [A, B] vanishes to depth K.
bool infinitesimally_irreducible(const SeriesMatrix& a, const SeriesMatrix& b, double rank_tol = 1e-8);

/// Numerical rank of a matrix relative to its largest singular value.
int numerical_rank(const MatX& m, double rank_tol);

// Scalar power series helpers (coefficients t^0..t^K).
namespace scalar_series {
std::vector<Complex> mul(const std::vector<Complex>& a, const std::vector<Complex>& b);
/// Square root of a series with even leading order; principal branch on the
/// leading coefficient. Result is valid through degree K - order/2.
std::vector<Complex> sqrt(const std::vector<Complex>& a, double tol, int* valid_degree);
int order(const std::vector<Complex>& a, double tol);
}  // namespace scalar_series

}  // namespace cmcnoid

#include "cmcnoid/finite_difference.hpp"

namespace cmcnoid {

template <class Fn>
SeriesMatrix series_from_samples(Fn&& f, double t0, int truncation, double h, int half_width,
                                 double order_tol) {
  std::vector<MatX> coeffs;
  double factorial = 1.0;
  for (int d = 0; d <= truncation; ++d) {
    if (d > 0) factorial *= d;
    coeffs.push_back(central_derivative(f, t0, d, h, half_width) / factorial);
  }
  return SeriesMatrix(std::move(coeffs), order_tol);
}

}  // namespace cmcnoid
