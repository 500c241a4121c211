#include "cmcnoid/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/SVD>

#include "cmcnoid/error.hpp"

namespace cmcnoid {

namespace {

void require_same_shape(const SeriesMatrix& a, const SeriesMatrix& b) {
  if (a.dim() != b.dim() || a.truncation() != b.truncation()) {
    throw Error(ErrorKind::InvalidArgument, "series operands differ in dimension or truncation");
  }
}

void require_depth(const SeriesMatrix& a, int order, const char* what) {
  if (order != kInfiniteOrder && 2 * order > a.truncation()) {
    throw Error(ErrorKind::TruncationExhausted,
                std::string(what) + ": order " + std::to_string(order) + " needs truncation >= " +
                    std::to_string(2 * order) + ", have " + std::to_string(a.truncation()));
  }
}

}  // namespace

SeriesMatrix::SeriesMatrix(int dim, int truncation, double order_tol)
    : dim_(dim), order_tol_(order_tol) {
  if (dim < 1 || truncation < 0) throw Error(ErrorKind::InvalidArgument, "bad series shape");
  coeffs_.assign(static_cast<std::size_t>(truncation + 1), MatX::Zero(dim, dim));
}

SeriesMatrix::SeriesMatrix(std::vector<MatX> coeffs, double order_tol)
    : dim_(coeffs.empty() ? 0 : static_cast<int>(coeffs.front().rows())),
      order_tol_(order_tol),
      coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw Error(ErrorKind::InvalidArgument, "series needs at least one coefficient");
  for (const auto& c : coeffs_) {
    if (c.rows() != dim_ || c.cols() != dim_) {
      throw Error(ErrorKind::InvalidArgument, "series coefficients must be square and equal-sized");
    }
  }
}

SeriesMatrix SeriesMatrix::constant(const MatX& value, int truncation, double order_tol) {
  SeriesMatrix out(static_cast<int>(value.rows()), truncation, order_tol);
  out.coeff(0) = value;
  return out;
}

SeriesMatrix SeriesMatrix::identity(int dim, int truncation, double order_tol) {
  return constant(MatX::Identity(dim, dim), truncation, order_tol);
}

double SeriesMatrix::magnitude() const {
  double m = 0.0;
  for (const auto& c : coeffs_) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

double SeriesMatrix::threshold() const {
  const double scale = std::max(magnitude(), reference_scale_);
  // An all-zero matrix has threshold 0 so that every entry reads as infinite order.
  return order_tol_ * scale;
}

int SeriesMatrix::entry_order(int mu, int nu) const {
  if (mu < 0 || mu >= dim_ || nu < 0 || nu >= dim_) {
    throw Error(ErrorKind::InvalidArgument, "series entry index out of range");
  }
  const double tol = threshold();
  for (int d = 0; d <= truncation(); ++d) {
    if (std::abs(coeffs_[static_cast<std::size_t>(d)](mu, nu)) > tol) return d;
  }
  return kInfiniteOrder;
}

int SeriesMatrix::order() const {
  int m = kInfiniteOrder;
  for (int mu = 0; mu < dim_; ++mu) {
    for (int nu = 0; nu < dim_; ++nu) m = std::min(m, entry_order(mu, nu));
  }
  return m;
}

SeriesMatrix SeriesMatrix::entry(int mu, int nu) const {
  SeriesMatrix out(1, truncation(), order_tol_);
  for (int d = 0; d <= truncation(); ++d) out.coeff(d)(0, 0) = coeff(d)(mu, nu);
  out.reference_scale_ = std::max(magnitude(), reference_scale_);
  return out;
}

SeriesMatrix SeriesMatrix::adjoint() const {
  SeriesMatrix out = *this;
  for (auto& c : out.coeffs_) c = c.adjoint().eval();
  return out;
}

MatX SeriesMatrix::evaluate(double t) const {
  MatX acc = MatX::Zero(dim_, dim_);
  for (int d = truncation(); d >= 0; --d) acc = (acc * t + coeff(d)).eval();
  return acc;
}

SeriesMatrix operator+(const SeriesMatrix& a, const SeriesMatrix& b) {
  require_same_shape(a, b);
  SeriesMatrix out = a;
  for (int d = 0; d <= a.truncation(); ++d) out.coeff(d) += b.coeff(d);
  out.reference_scale_ = std::max({a.magnitude(), a.reference_scale_, b.magnitude(), b.reference_scale_});
  return out;
}

SeriesMatrix operator-(const SeriesMatrix& a, const SeriesMatrix& b) {
  return a + (Complex(-1.0) * b);
}

SeriesMatrix operator*(const SeriesMatrix& a, const SeriesMatrix& b) {
  require_same_shape(a, b);
  SeriesMatrix out(a.dim(), a.truncation(), std::max(a.order_tol(), b.order_tol()));
  for (int k = 0; k <= a.truncation(); ++k) {
    for (int i = 0; i <= k; ++i) out.coeff(k) += a.coeff(i) * b.coeff(k - i);
  }
  out.reference_scale_ = std::max(a.magnitude(), a.reference_scale_) *
                         std::max(b.magnitude(), b.reference_scale_) * a.dim();
  return out;
}

SeriesMatrix operator*(Complex s, const SeriesMatrix& a) {
  SeriesMatrix out = a;
  for (auto& c : out.coeffs_) c *= s;
  out.reference_scale_ = std::abs(s) * std::max(a.magnitude(), a.reference_scale_);
  return out;
}

SeriesMatrix commutator(const SeriesMatrix& a, const SeriesMatrix& b) { return a * b - b * a; }

SeriesMatrix inverse(const SeriesMatrix& x) {
  Eigen::PartialPivLU<MatX> lu(x.coeff(0));
  if (std::abs(lu.determinant()) < 1e-14 * std::pow(std::max(x.coeff(0).norm(), 1e-300), x.dim())) {
    throw Error(ErrorKind::InvalidArgument, "series inverse needs an invertible constant term");
  }
  SeriesMatrix y(x.dim(), x.truncation(), x.order_tol());
  y.coeff(0) = lu.inverse();
  for (int k = 1; k <= x.truncation(); ++k) {
    MatX acc = MatX::Zero(x.dim(), x.dim());
    for (int i = 1; i <= k; ++i) acc += x.coeff(i) * y.coeff(k - i);
    y.coeff(k) = -y.coeff(0) * acc;
  }
  return y;
}

XiGraph::XiGraph(int n, std::initializer_list<std::pair<int, int>> edges) : n_(n) {
  for (const auto& [a, b] : edges) add_edge(a, b);
}

void XiGraph::add_edge(int from, int to) {
  if (from < 0 || from >= n_ || to < 0 || to >= n_) {
    throw Error(ErrorKind::InvalidArgument, "graph edge out of range");
  }
  edges_.emplace(from, to);
}

std::vector<std::vector<int>> XiGraph::components() const {
  std::vector<int> parent(static_cast<std::size_t>(n_));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const auto& [a, b] : edges_) parent[static_cast<std::size_t>(find(a))] = find(b);
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(static_cast<std::size_t>(n_), -1);
  for (int v = 0; v < n_; ++v) {
    const int r = find(v);
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])].push_back(v);
  }
  return groups;
}

bool XiGraph::connected() const { return components().size() <= 1; }

int entry_order(const SeriesMatrix& a, int mu, int nu, bool require_finite) {
  const int ord = a.entry_order(mu, nu);
  if (require_finite && ord == kInfiniteOrder) {
    throw Error(ErrorKind::TruncationExhausted,
                "entry (" + std::to_string(mu) + "," + std::to_string(nu) + ") vanishes through the truncation depth");
  }
  return ord;
}

bool g_nonzero(const SeriesMatrix& a, const XiGraph& g) {
  if (a.dim() != g.size()) throw Error(ErrorKind::InvalidArgument, "graph and series differ in size");
  return std::all_of(g.edges().begin(), g.edges().end(),
                     [&](const auto& e) { return a.entry_order(e.first, e.second) != kInfiniteOrder; });
}

bool g_compatible(const SeriesMatrix& a, const SeriesMatrix& b, const XiGraph& g) {
  require_same_shape(a, b);
  if (a.dim() != g.size()) throw Error(ErrorKind::InvalidArgument, "graph and series differ in size");
  for (const auto& [mu, nu] : g.edges()) {
    const int oa = a.entry_order(mu, nu);
    if (oa == kInfiniteOrder || oa != b.entry_order(mu, nu)) return false;
  }
  return true;
}

XiGraph maximal_nonzero_graph(const SeriesMatrix& a) {
  XiGraph g(a.dim());
  for (int mu = 0; mu < a.dim(); ++mu) {
    for (int nu = 0; nu < a.dim(); ++nu) {
      if (a.entry_order(mu, nu) != kInfiniteOrder) g.add_edge(mu, nu);
    }
  }
  return g;
}

XiGraph maximal_compatible_graph(const SeriesMatrix& a, const SeriesMatrix& b) {
  require_same_shape(a, b);
  XiGraph g(a.dim());
  for (int mu = 0; mu < a.dim(); ++mu) {
    for (int nu = 0; nu < a.dim(); ++nu) {
      const int oa = a.entry_order(mu, nu);
      if (oa != kInfiniteOrder && oa == b.entry_order(mu, nu)) g.add_edge(mu, nu);
    }
  }
  return g;
}

bool exists_connected_compatible_graph(const SeriesMatrix& a, const SeriesMatrix& b) {
  // Compatibility is edgewise, so a connected compatible graph exists iff the
  // maximal one is connected.
  return maximal_compatible_graph(a, b).connected();
}

std::optional<Partition> reducibility_block_test(const SeriesMatrix& a) {
  const auto comps = maximal_nonzero_graph(a).components();
  if (comps.size() <= 1) return std::nullopt;
  Partition p;
  p.first = comps.front();
  for (std::size_t i = 1; i < comps.size(); ++i) {
    p.second.insert(p.second.end(), comps[i].begin(), comps[i].end());
  }
  std::sort(p.second.begin(), p.second.end());
  return p;
}

int numerical_rank(const MatX& m, double rank_tol) {
  Eigen::JacobiSVD<MatX> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rank_tol * s(0)) ++r;
  }
  return r;
}

InvertibilityReport infinitesimally_invertible(const SeriesMatrix& x, double rank_tol) {
  InvertibilityReport rep;
  rep.order = x.order();
  if (rep.order == kInfiniteOrder) {
    throw Error(ErrorKind::TruncationExhausted, "series vanishes through the truncation depth");
  }
  require_depth(x, rep.order, "infinitesimally_invertible");
  rep.leading = x.coeff(rep.order);
  rep.invertible = numerical_rank(rep.leading, rank_tol) == x.dim();
  return rep;
}

namespace scalar_series {

std::vector<Complex> mul(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::vector<Complex> out(n, Complex(0.0));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i <= k; ++i) out[k] += a[i] * b[k - i];
  }
  return out;
}

int order(const std::vector<Complex>& a, double tol) {
  for (std::size_t d = 0; d < a.size(); ++d) {
    if (std::abs(a[d]) > tol) return static_cast<int>(d);
  }
  return kInfiniteOrder;
}

std::vector<Complex> sqrt(const std::vector<Complex>& a, double tol, int* valid_degree) {
  const int k = static_cast<int>(a.size()) - 1;
  const int m = order(a, tol);
  std::vector<Complex> out(a.size(), Complex(0.0));
  if (m == kInfiniteOrder) {
    if (valid_degree) *valid_degree = k;
    return out;
  }
  if (m % 2 != 0) {
    throw Error(ErrorKind::NonAnalyticEigenvalues, "square root of a series with odd leading order");
  }
  const int h = m / 2;
  // a = t^m u with u(0) != 0; sqrt(a) = t^h sqrt(u), sqrt(u) known through degree k - m.
  const int ulen = k - m;
  std::vector<Complex> s(static_cast<std::size_t>(ulen + 1), Complex(0.0));
  auto u = [&](int d) { return a[static_cast<std::size_t>(d + m)]; };
  s[0] = std::sqrt(u(0));
  for (int d = 1; d <= ulen; ++d) {
    Complex acc = u(d);
    for (int i = 1; i < d; ++i) acc -= s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(d - i)];
    s[static_cast<std::size_t>(d)] = acc / (2.0 * s[0]);
  }
  for (int d = 0; d <= ulen && d + h <= k; ++d) out[static_cast<std::size_t>(d + h)] = s[static_cast<std::size_t>(d)];
  if (valid_degree) *valid_degree = ulen + h;
  return out;
}

}  // namespace scalar_series

bool locally_diagonalizable(const SeriesMatrix& m) {
  if (m.dim() != 2) throw Error(ErrorKind::InvalidArgument, "locally_diagonalizable needs a 2x2 series");
  const int k = m.truncation();
  const double scale = std::max(m.magnitude(), m.reference_scale());
  const double tol = m.order_tol() * scale;

  std::vector<Complex> tau(static_cast<std::size_t>(k + 1));
  for (int d = 0; d <= k; ++d) tau[static_cast<std::size_t>(d)] = m.coeff(d).trace();
  auto entry = [&](int r, int c) {
    std::vector<Complex> e(static_cast<std::size_t>(k + 1));
    for (int d = 0; d <= k; ++d) e[static_cast<std::size_t>(d)] = m.coeff(d)(r, c);
    return e;
  };
  const auto a = entry(0, 0);
  const auto b = entry(0, 1);
  const auto c = entry(1, 0);
  const auto dd = entry(1, 1);
  // Discriminant tau^2/4 - det = ((a - d)/2)^2 + b c, formed without cancellation of the constant part.
  std::vector<Complex> half_diff(static_cast<std::size_t>(k + 1));
  for (int d = 0; d <= k; ++d) {
    half_diff[static_cast<std::size_t>(d)] = 0.5 * (a[static_cast<std::size_t>(d)] - dd[static_cast<std::size_t>(d)]);
  }
  auto disc = scalar_series::mul(half_diff, half_diff);
  const auto bc = scalar_series::mul(b, c);
  for (int d = 0; d <= k; ++d) disc[static_cast<std::size_t>(d)] += bc[static_cast<std::size_t>(d)];

  const double disc_tol = m.order_tol() * scale * scale;
  const int disc_order = scalar_series::order(disc, disc_tol);
  int valid = k;
  const auto root = scalar_series::sqrt(disc, disc_tol, &valid);

  // M - mu1 id with mu1 = tau/2 + root.
  SeriesMatrix shifted = m;
  for (int d = 0; d <= k; ++d) {
    const Complex mu = 0.5 * tau[static_cast<std::size_t>(d)] + root[static_cast<std::size_t>(d)];
    shifted.coeff(d) -= mu * MatX::Identity(2, 2);
  }
  shifted.set_reference_scale(scale);
  int shifted_order = kInfiniteOrder;
  for (int r = 0; r < 2; ++r) {
    for (int cc = 0; cc < 2; ++cc) {
      for (int d = 0; d <= valid; ++d) {
        if (std::abs(shifted.coeff(d)(r, cc)) > tol) {
          shifted_order = std::min(shifted_order, d);
          break;
        }
      }
    }
  }
  if (disc_order == kInfiniteOrder && shifted_order == kInfiniteOrder) {
    throw Error(ErrorKind::InvalidArgument, "series is a scalar multiple of the identity to the truncation depth");
  }
  const int diff_order = disc_order == kInfiniteOrder ? kInfiniteOrder : disc_order / 2;
  require_depth(m, std::min(diff_order, shifted_order), "locally_diagonalizable");
  if (diff_order != kInfiniteOrder) require_depth(m, diff_order, "locally_diagonalizable");
  return diff_order == shifted_order;
}

bool infinitesimally_irreducible(const SeriesMatrix& a, const SeriesMatrix& b, double rank_tol) {
  if (a.dim() != 2 || b.dim() != 2) {
    throw Error(ErrorKind::InvalidArgument, "infinitesimally_irreducible needs 2x2 series");
  }
  const SeriesMatrix comm = commutator(a, b);
  const int ord = comm.order();
  if (ord == kInfiniteOrder) {
    throw Error(ErrorKind::TruncationExhausted, "commutator vanishes through the truncation depth");
  }
  require_depth(comm, ord, "infinitesimally_irreducible");
  return numerical_rank(comm.coeff(ord), rank_tol) == 2;
}

}  // namespace cmcnoid
