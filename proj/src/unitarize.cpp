#include "cmcnoid/unitarize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "cmcnoid/error.hpp"
#include "cmcnoid/finite_difference.hpp"
#include "cmcnoid/parallel.hpp"
#include "cmcnoid/series.hpp"

namespace cmcnoid {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Unitarizable:
      return "Unitarizable";
    case Verdict::Reducible:
      return "Reducible";
    case Verdict::NotUnitarizable:
      return "NotUnitarizable";
  }
  return "?";
}

double goldman_T(double t1, double t2, double t3) {
  return 1.0 - t1 * t1 - t2 * t2 - t3 * t3 + 2.0 * t1 * t2 * t3;
}

std::optional<std::size_t> GoldmanReport::first_not_unitarizable() const {
  for (std::size_t j = 0; j < verdicts.size(); ++j) {
    if (verdicts[j] == Verdict::NotUnitarizable) return j;
  }
  return std::nullopt;
}

GoldmanReport goldman_T(const ScalarLoop& t1, const ScalarLoop& t2, const ScalarLoop& t3,
                        const UnitarizeOptions& opt) {
  if (t1.size() != t2.size() || t1.size() != t3.size()) {
    throw Error(ErrorKind::InvalidArgument, "trace loops differ in length");
  }
  GoldmanReport out;
  out.T.resize(t1.size());
  out.verdicts.resize(t1.size());
  auto clamp = [](Complex t) { return std::clamp(t.real(), -1.0, 1.0); };
  for (std::size_t j = 0; j < t1.size(); ++j) {
    const double im = std::max({std::abs(t1[j].imag()), std::abs(t2[j].imag()), std::abs(t3[j].imag())});
    out.max_imag_trace = std::max(out.max_imag_trace, im);
    if (im > opt.imag_tol && !out.first_non_real) out.first_non_real = j;
    const double t = goldman_T(clamp(t1[j]), clamp(t2[j]), clamp(t3[j]));
    out.T[j] = t;
    if (std::abs(t) <= opt.t_tol) {
      out.zero_set.push_back(j);
      out.verdicts[j] = Verdict::Reducible;
    } else {
      out.verdicts[j] = t > 0.0 ? Verdict::Unitarizable : Verdict::NotUnitarizable;
    }
  }
  return out;
}

namespace {

ScalarLoop half_trace(const LoopMatrix& m) {
  ScalarLoop t = trace(m);
  for (auto& v : t) v *= 0.5;
  return t;
}

}  // namespace

GoldmanReport goldman_report(const MonodromySet& ms, const UnitarizeOptions& opt) {
  const auto triple = ms.unitarization_triple();
  return goldman_T(half_trace(triple[0]), half_trace(triple[1]), half_trace(triple[2]), opt);
}

bool AdmissibilityReport::admissible() const {
  return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.holds; });
}

std::string AdmissibilityReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.holds) return c.id;
  }
  return {};
}

namespace {

void add_check(AdmissibilityReport& r, std::string id, std::string description, double lhs, double rhs) {
  r.checks.push_back({std::move(id), std::move(description), lhs, rhs, lhs < rhs});
}

// |rho_w(lambda)| for lambda = +-1; nullopt when rho is not real there.
std::optional<double> real_rho(double w, Complex lambda, Complex lambda0) {
  try {
    const Complex r = rho(lambda, w, lambda0);
    if (std::abs(r.imag()) > 1e-12) return std::nullopt;
    return std::abs(r.real());
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Sum and triangle inequalities on three absolute values.
void sum_and_triangles(AdmissibilityReport& r, const std::string& prefix, const char* symbol, const double a[3]) {
  static const char* names[3] = {"0", "1", "inf"};
  add_check(r, prefix + "_sum", std::string("|") + symbol + "_0|+|" + symbol + "_1|+|" + symbol + "_inf| < 1",
            a[0] + a[1] + a[2], 1.0);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    add_check(r, prefix + "_triangle_" + names[i],
              std::string("|") + symbol + "_" + names[i] + "| < |" + symbol + "_" + names[j] + "|+|" + symbol + "_" +
                  names[k] + "|",
              a[i], a[j] + a[k]);
  }
}

}  // namespace

AdmissibilityReport trinoid_admissible(const Trinoid& t, const SpaceForm& form) {
  AdmissibilityReport r;
  const double w[3] = {t.w0, t.w1, t.winf};
  for (double x : w) {
    if (x == 0.0) throw Error(ErrorKind::InvalidArgument, "trinoid weights must be nonzero");
  }
  double n[3], m[3];
  bool real_n = true, real_m = true;
  for (int k = 0; k < 3; ++k) {
    const auto nk = real_rho(w[k], -1.0, form.lambda0);
    const auto mk = real_rho(w[k], 1.0, form.lambda0);
    real_n = real_n && nk.has_value();
    real_m = real_m && mk.has_value();
    n[k] = nk.value_or(0.0);
    m[k] = mk.value_or(0.0);
  }
  const bool need_m = form.kind != SpaceFormKind::R3;
  add_check(r, "radicand", "1 + w h(+-1) > 0 for every weight", (real_n && (real_m || !need_m)) ? 0.0 : 1.0, 1.0);
  sum_and_triangles(r, "n", "n", n);
  if (need_m) {
    sum_and_triangles(r, "m", "m", m);
  } else {
    const double aw[3] = {std::abs(w[0]), std::abs(w[1]), std::abs(w[2])};
    static const char* names[3] = {"0", "1", "inf"};
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      add_check(r, std::string("w_triangle_") + names[i],
                std::string("|w_") + names[i] + "| < |w_" + names[j] + "|+|w_" + names[k] + "|", aw[i],
                aw[j] + aw[k]);
    }
  }
  return r;
}

AdmissibilityReport nnoid_admissible(const SymmetricNoid& s, const SpaceForm& form) {
  if (s.n < 3) throw Error(ErrorKind::InvalidArgument, "symmetric n-noid needs n >= 3");
  if (s.w == 0.0) throw Error(ErrorKind::InvalidArgument, "symmetric n-noid weight must be nonzero");
  AdmissibilityReport r;
  const auto plus = real_rho(s.w, 1.0, form.lambda0);
  const auto minus = real_rho(s.w, -1.0, form.lambda0);
  add_check(r, "radicand", "1 + w h(+-1) > 0", (plus && minus) ? 0.0 : 1.0, 1.0);
  const double bound = 1.0 / static_cast<double>(s.n);
  add_check(r, "rho_plus", "|rho(1)| < 1/n", plus.value_or(1.0), bound);
  add_check(r, "rho_minus", "|rho(-1)| < 1/n", minus.value_or(1.0), bound);
  return r;
}

AdmissibilityReport admissible(const SpaceForm& form, const NoidVariant& variant) {
  if (const auto* t = std::get_if<Trinoid>(&variant)) return trinoid_admissible(*t, form);
  return nnoid_admissible(std::get<SymmetricNoid>(variant), form);
}

std::vector<MatX> L_apply(const MatX& x, const std::vector<MatX>& ms) {
  std::vector<MatX> out;
  out.reserve(ms.size());
  for (const auto& m : ms) out.push_back(x * m - m.adjoint().inverse() * x);
  return out;
}

MatX flatten_L(const std::vector<MatX>& ms) {
  if (ms.empty()) throw Error(ErrorKind::InvalidArgument, "L needs at least one matrix");
  const int n = static_cast<int>(ms.front().rows());
  const int n2 = n * n;
  MatX out = MatX::Zero(static_cast<Eigen::Index>(ms.size()) * n2, n2);
  const MatX id = MatX::Identity(n, n);
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const MatX mt = ms[k].transpose();
    const MatX minv_star = ms[k].adjoint().inverse();
    // vec(X M) = (M^T kron I) vec X and vec(A X) = (I kron A) vec X.
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        auto block = out.block(static_cast<Eigen::Index>(k) * n2 + a * n, b * n, n, n);
        block += mt(a, b) * id;
        if (a == b) block -= minv_star;
      }
    }
  }
  return out;
}

namespace {

constexpr double kVanishingL = 1e-9;

MatX unvec(const VecX& v, int n) {
  MatX x(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) x(r, c) = v(c * n + r);
  return x;
}

// Hermitian part of a kernel vector determined up to a complex scalar.
MatX hermitianize(const MatX& x1, double herm_tol) {
  const double norm = x1.norm();
  if ((x1 - x1.adjoint()).norm() <= herm_tol * norm) return 0.5 * (x1 + x1.adjoint());
  const MatX a = x1 + x1.adjoint();
  const MatX b = kI * (x1 - x1.adjoint());
  return a.norm() >= b.norm() ? a : b;
}

// Sign by f = v* X v, then det normalization; nullopt when not positive definite.
std::optional<MatX> normalize_positive(MatX x) {
  const int n = static_cast<int>(x.rows());
  VecX v = VecX::Zero(n);
  v(0) = 1.0;
  if (n > 1) v(1) = Complex(0.37, 0.21);
  const double f = (v.adjoint() * x * v)(0, 0).real();
  if (f < 0.0) x = -x;
  x = (0.5 * (x + x.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<MatX> es(x, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) return std::nullopt;
  const double d = es.eigenvalues().prod();
  return MatX(x / std::pow(d, 1.0 / n));
}

}  // namespace

KernelResult kernel_loop(const std::vector<LoopMatrix>& ms, const UnitarizeOptions& opt) {
  if (ms.empty()) throw Error(ErrorKind::InvalidArgument, "kernel_loop needs generators");
  const CircleGrid grid = ms.front().grid();
  const std::size_t count = grid.size();
  const int n = ms.front().dim();
  for (const auto& m : ms) {
    if (!(m.grid() == grid) || m.dim() != n) throw Error(ErrorKind::InvalidArgument, "generator grids differ");
  }

  KernelResult out;
  out.sigma_min.resize(count);
  out.sigma_2.resize(count);
  out.sigma_max.resize(count);
  std::vector<MatX> raw(count);

  // Phase 1, per sample and parallel: SVD of the flattened operator.
  parallel_for(count, [&](std::size_t j) {
    std::vector<MatX> at;
    for (const auto& m : ms) at.push_back(MatX(m[j]));
    Eigen::JacobiSVD<MatX> svd(flatten_L(at), Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const Eigen::Index last = s.size() - 1;
    out.sigma_max[j] = s(0);
    out.sigma_min[j] = s(last);
    out.sigma_2[j] = s(last - 1);
    raw[j] = unvec(svd.matrixV().col(last), n);
  });

  // Classification: a sample is degenerate when the kernel is not separated.
  // A sample needs repair when L nearly vanishes (all generators near id),
  // when the kernel is not separated from the next singular value, or when
  // the kernel is more than one-dimensional. Such samples must come in
  // isolated runs of at most max_window; a longer run means dim ker L > 1
  // on an interval.
  const double global_max = *std::max_element(out.sigma_max.begin(), out.sigma_max.end());
  std::vector<bool> repair(count, false);
  for (std::size_t j = 0; j < count; ++j) {
    repair[j] = out.sigma_max[j] <= kVanishingL * global_max ||
                out.sigma_min[j] > opt.degenerate_ratio * out.sigma_2[j] ||
                out.sigma_2[j] < opt.sep_floor * out.sigma_max[j];
  }
  if (std::all_of(repair.begin(), repair.end(), [](bool b) { return b; })) {
    throw Error(ErrorKind::KernelDimensionHigh, "kernel of L is not one-dimensional at any sample");
  }
  {
    std::size_t start = 0;
    while (repair[start]) ++start;  // a good sample, so runs do not wrap past it
    std::size_t run = 0;
    for (std::size_t step = 1; step <= count; ++step) {
      const std::size_t j = (start + step) % count;
      if (!repair[j]) {
        run = 0;
        continue;
      }
      if (++run > static_cast<std::size_t>(opt.max_window)) {
        throw Error(ErrorKind::KernelDimensionHigh,
                    "kernel of L is not one-dimensional on more than " + std::to_string(opt.max_window) +
                        " consecutive samples",
                    static_cast<long>(j));
      }
    }
  }

  // Phase 2, sequential: random phase, alignment to the previous good sample,
  // Hermitian part, sign and det normalization.
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  LoopMatrix x(grid, n);
  std::optional<MatX> previous;
  std::vector<std::size_t> good;
  for (std::size_t j = 0; j < count; ++j) {
    MatX x1 = raw[j] * std::exp(kI * phase(rng));
    if (repair[j]) continue;
    if (previous) {
      const Complex overlap = (previous->array().conjugate() * x1.array()).sum();
      if (std::abs(overlap) > 0.0) x1 *= std::conj(overlap) / std::abs(overlap);
    }
    previous = x1;
    const auto y = normalize_positive(hermitianize(x1, opt.herm_tol));
    if (!y) throw Error(ErrorKind::NotPositive, "kernel element is not definite", static_cast<long>(j));
    x[j] = *y;
    good.push_back(j);
  }

  // Degenerate samples: least-squares trigonometric fit of the good samples.
  for (std::size_t j = 0; j < count; ++j) {
    if (repair[j]) out.degenerate.push_back(j);
  }
  if (!out.degenerate.empty()) {
    const int degree = std::min<int>(static_cast<int>(count / 4), (static_cast<int>(good.size()) - 1) / 2);
    const int cols = 2 * degree + 1;
    MatX a(static_cast<Eigen::Index>(good.size()), cols);
    for (std::size_t r = 0; r < good.size(); ++r) {
      const double t = grid.angle(good[r]);
      for (int d = -degree; d <= degree; ++d) a(static_cast<Eigen::Index>(r), d + degree) = std::exp(kI * (d * t));
    }
    MatX rhs(static_cast<Eigen::Index>(good.size()), n * n);
    for (std::size_t r = 0; r < good.size(); ++r) {
      const MatX& s = x[good[r]];
      for (int e = 0; e < n * n; ++e) rhs(static_cast<Eigen::Index>(r), e) = s(e % n, e / n);
    }
    Eigen::ColPivHouseholderQR<MatX> qr(a);
    const MatX coef = qr.solve(rhs);
    out.fit_residual = (a * coef - rhs).cwiseAbs().maxCoeff();
    for (std::size_t j : out.degenerate) {
      const double t = grid.angle(j);
      MatX value = MatX::Zero(n, n);
      for (int d = -degree; d <= degree; ++d) {
        const Complex e = std::exp(kI * (d * t));
        for (int k = 0; k < n * n; ++k) value(k % n, k / n) += e * coef(d + degree, k);
      }
      const auto y = normalize_positive(0.5 * (value + value.adjoint()));
      if (!y) throw Error(ErrorKind::NotPositive, "interpolated kernel element is not definite", static_cast<long>(j));
      x[j] = *y;
    }
  }

  out.kernel_residual.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<MatX> at;
    for (const auto& m : ms) at.push_back(MatX(m[j]));
    double r = 0.0;
    for (const auto& d : L_apply(MatX(x[j]), at)) r = std::max(r, d.norm());
    out.kernel_residual[j] = r;
  }
  out.X = std::move(x);
  return out;
}

LoopMatrix cholesky_loop(const LoopMatrix& x, double chol_tol) {
  const int n = x.dim();
  LoopMatrix v(x.grid(), n);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const MatX xj = x[j];
    MatX u = MatX::Zero(n, n);
    // X = R* D R with R unit upper triangular; V = sqrt(D) R row by row.
    for (int k = 0; k < n; ++k) {
      Complex d = xj(k, k);
      for (int i = 0; i < k; ++i) d -= std::norm(u(i, k));
      if (!(d.real() > 0.0)) {
        throw Error(ErrorKind::NotPositiveDefinite, "pivot " + std::to_string(k) + " is not positive",
                    static_cast<long>(j));
      }
      u(k, k) = std::sqrt(d.real());
      for (int c = k + 1; c < n; ++c) {
        Complex s = xj(k, c);
        for (int i = 0; i < k; ++i) s -= std::conj(u(i, k)) * u(i, c);
        u(k, c) = s / u(k, k);
      }
    }
    if ((u.adjoint() * u - xj).norm() > chol_tol * std::max(1.0, xj.norm())) {
      throw Error(ErrorKind::NotPositiveDefinite, "Cholesky round trip above tolerance", static_cast<long>(j));
    }
    v[j] = u;
  }
  return v;
}

std::vector<double> unitarity_residuals(const LoopMatrix& v, const LoopMatrix& m) {
  std::vector<double> r(m.size());
  const MatX id = MatX::Identity(m.dim(), m.dim());
  for (std::size_t j = 0; j < m.size(); ++j) {
    const MatX vj = v[j];
    const MatX c = vj * MatX(m[j]) * vj.inverse();
    r[j] = (c.adjoint() * c - id).norm();
  }
  return r;
}

namespace {

double max_of(const std::vector<std::vector<double>>& r) {
  double m = 0.0;
  for (const auto& row : r)
    for (double x : row) m = std::max(m, x);
  return m;
}

}  // namespace

double UnitarizerResult::max_residual() const { return max_of(residuals); }
double UnitarizerResult::max_residual_c_plus() const { return max_of(residuals_c_plus); }

UnitarizerResult unitarize(const std::vector<LoopMatrix>& generators, const std::vector<std::string>& names,
                           const UnitarizeOptions& opt) {
  UnitarizerResult out;
  out.kernel = kernel_loop(generators, opt);
  out.X = out.kernel.X;
  out.V = cholesky_loop(out.X, opt.chol_tol);
  out.names = names;
  for (const auto& m : generators) out.residuals.push_back(unitarity_residuals(out.V, m));

  // Words of length two in the generators and their inverses stay unitary.
  for (std::size_t a = 0; a < generators.size(); ++a) {
    for (std::size_t b = 0; b < generators.size(); ++b) {
      if (a == b) continue;
      for (const auto& w : {mul(generators[a], generators[b]), mul(inv(generators[a]), generators[b])}) {
        for (double r : unitarity_residuals(out.V, w)) out.coverage_residual = std::max(out.coverage_residual, r);
      }
    }
  }

  if (opt.iwasawa_positive_part) {
    out.C_plus = iwasawa(out.V, opt.iwasawa).B;
    for (const auto& m : generators) out.residuals_c_plus.push_back(unitarity_residuals(*out.C_plus, m));
  }
  return out;
}

UnitarizerResult unitarize(const MonodromySet& ms, const UnitarizeOptions& opt) {
  const auto triple = ms.unitarization_triple();
  std::vector<std::string> names;
  if (ms.pot.is_trinoid()) {
    names = {"M0", "M1", "Minf"};
  } else {
    names = {"M0", "g", "(M0 g)^-1"};
  }
  return unitarize(triple, names, opt);
}

double binomial(int r, int s) {
  if (s < 0 || s > r) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= s; ++i) b = b * (r - s + i) / i;
  return b;
}

bool HypothesisReport::all_hold() const {
  return goldman_consistent &&
         std::all_of(series_checks.begin(), series_checks.end(), [](const SeriesCheck& c) { return c.holds; }) &&
         std::all_of(identities.begin(), identities.end(), [](const IdentityCheck& c) { return c.holds; });
}

namespace {

struct PairSpec {
  std::string a_name, b_name;
  int order = 0;        // first nonvanishing derivative of the commutator
  bool lambda_derivative = false;  // identity stated in lambda rather than theta
};

Mat2 pair_commutator(const MonodromySet& ms, Complex lambda, double tol) {
  const auto gens = generators_at(ms, lambda, tol);
  if (ms.pot.is_trinoid()) return gens[0] * gens[1] - gens[1] * gens[0];
  const Mat2 g = *ms.symmetry;
  return g * gens[0] - gens[0] * g;
}

Complex expected_identity(const MonodromySet& ms, Complex p) {
  const SpaceForm& form = ms.pot.form();
  const bool at_one = form.kind == SpaceFormKind::R3;
  const double pi2 = kPi * kPi, pi4 = pi2 * pi2;
  if (ms.pot.is_trinoid()) {
    const auto& t = ms.pot.trinoid();
    const double c = chi(t.w0, t.w1, t.winf);
    if (at_one) return 4.0 / binomial(8, 4) * 315.0 * std::pow(2.0, -7) * pi4 * c;
    const Complex l0 = form.lambda0;
    // At lambda0^{+1} the factor is (1 - lambda0^{-2})^4, at lambda0^{-1} it is (1 - lambda0^2)^4.
    const bool plus = std::abs(p - l0) < std::abs(p - 1.0 / l0);
    const Complex f = 1.0 - (plus ? 1.0 / (l0 * l0) : l0 * l0);
    return 4.0 / binomial(4, 2) * 3.0 * std::pow(2.0, -11) * pi4 * std::pow(f, 4) * c;
  }
  const auto& s = ms.pot.noid();
  const Complex alpha = std::exp(2.0 * kPi * kI / static_cast<double>(s.n));
  const Complex one_minus = (1.0 - alpha) * (1.0 - alpha);
  if (at_one) return -1.0 / (alpha * binomial(4, 2)) * 3.0 * std::pow(2.0, -3) * pi2 * one_minus * s.w * s.w;
  const Complex l0 = form.lambda0;
  const Complex d = l0 - 1.0 / l0;
  return 1.0 / (alpha * binomial(2, 1)) * std::pow(2.0, -5) * pi2 * one_minus * d * d * s.w * s.w;
}

}  // namespace

HypothesisReport verify_hypotheses(const MonodromySet& ms, const UnitarizeOptions& opt,
                                   const HypothesisOptions& hopt) {
  HypothesisReport out;
  const bool trinoid = ms.pot.is_trinoid();
  const SpaceForm& form = ms.pot.form();
  const bool r3 = form.kind == SpaceFormKind::R3;

  // Goldman consistency and irreducibility off the zero set.
  const auto triple = ms.unitarization_triple();
  const auto gold = goldman_report(ms, opt);
  out.zero_set_size = gold.zero_set.size();
  const ScalarLoop dc = det(commutator(triple[0], triple[1]));
  out.min_commutator_det = std::numeric_limits<double>::infinity();
  std::vector<bool> in_zero(dc.size(), false);
  for (std::size_t j : gold.zero_set) in_zero[j] = true;
  for (std::size_t j = 0; j < dc.size(); ++j) {
    out.goldman_consistency = std::max(out.goldman_consistency, std::abs(dc[j] - 4.0 * gold.T[j]));
    if (!in_zero[j]) out.min_commutator_det = std::min(out.min_commutator_det, std::abs(dc[j]));
  }
  if (trinoid) {
    const auto& t = ms.pot.trinoid();
    out.chi = chi(t.w0, t.w1, t.winf);
  }

  PairSpec pair;
  pair.a_name = trinoid ? "M0" : "g";
  pair.b_name = trinoid ? "M1" : "M0";
  if (trinoid) {
    pair.order = r3 ? 4 : 2;
    pair.lambda_derivative = !r3;
  } else {
    pair.order = r3 ? 2 : 1;
  }

  for (const Complex p : form.closing_points()) {
    // Series of the generators in theta, lambda = p e^{i theta}, from jets.
    const auto j0 = integrate_jets(ms.pot, ms.paths[0], p, hopt.jet_order, hopt.jet_ode_tol);
    std::vector<MatX> c0(j0.begin(), j0.end());
    SeriesMatrix s0(c0);
    SeriesMatrix s1(2, hopt.jet_order);
    if (trinoid) {
      const auto j1 = integrate_jets(ms.pot, ms.paths[1], p, hopt.jet_order, hopt.jet_ode_tol);
      s1 = SeriesMatrix(std::vector<MatX>(j1.begin(), j1.end()));
    } else {
      s1 = SeriesMatrix::constant(MatX(*ms.symmetry), hopt.jet_order);
    }
    const SeriesMatrix& sa = trinoid ? s0 : s1;
    const SeriesMatrix& sb = trinoid ? s1 : s0;

    auto record = [&](const std::string& subject, const std::string& property, auto&& fn) {
      SeriesCheck c{p, subject, property, false, {}};
      try {
        c.holds = fn();
      } catch (const Error& e) {
        c.detail = e.what();
      }
      out.series_checks.push_back(std::move(c));
    };
    record(pair.a_name, "locally_diagonalizable", [&] { return locally_diagonalizable(sa); });
    record(pair.b_name, "locally_diagonalizable", [&] { return locally_diagonalizable(sb); });
    record(pair.a_name + "," + pair.b_name, "infinitesimally_irreducible",
           [&] { return infinitesimally_irreducible(sa, sb); });

    // Commutator-determinant identity.
    IdentityCheck id;
    id.point = p;
    std::ostringstream name;
    name << "det [" << pair.a_name << "," << pair.b_name << "]^(" << pair.order << ")";
    id.name = name.str();
    const MatX fd = central_derivative(
        [&](double t) { return MatX(pair_commutator(ms, p * std::exp(kI * t), hopt.jet_ode_tol)); }, 0.0, pair.order,
        hopt.fd_step, hopt.fd_half_width);
    double factorial = 1.0;
    for (int k = 2; k <= pair.order; ++k) factorial *= k;
    const MatX jet = factorial * commutator(sa, sb).coeff(pair.order);
    // lambda-derivatives: d^m/dtheta^m = (i p)^m d^m/dlambda^m when lower orders vanish.
    const Complex conv = pair.lambda_derivative ? std::pow(kI * p, 2 * pair.order) : Complex(1.0);
    id.measured = fd.determinant() / conv;
    id.jet = jet.determinant() / conv;
    id.expected = expected_identity(ms, p);
    id.relative_error = std::abs(id.measured - id.expected) / std::abs(id.expected);
    id.holds = id.relative_error < hopt.identity_tol;
    out.identities.push_back(id);
  }
  out.goldman_consistent = out.goldman_consistency < hopt.goldman_tol;
  return out;
}

namespace {

Mat2 su2(double a, double b, double c) {
  Mat2 u;
  u << std::exp(kI * a) * std::cos(b), std::exp(kI * c) * std::sin(b), -std::exp(-kI * c) * std::sin(b),
      std::exp(-kI * a) * std::cos(b);
  return u;
}

}  // namespace

ConjugatedUnitaryFixture conjugated_unitary_fixture(const CircleGrid& grid, std::uint64_t seed, int generators) {
  if (generators < 2) throw Error(ErrorKind::InvalidArgument, "fixture needs at least two generators");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  MatX a(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = Complex(g(rng), g(rng));
  a /= std::sqrt(a.determinant());
  ConjugatedUnitaryFixture out;
  out.C = LoopMatrix::from_function(grid, 2, [&](Complex l) {
    MatX n = MatX::Identity(2, 2);
    n(0, 1) = 0.3 * l + 0.2 / l;
    return MatX(a * n);
  });
  const LoopMatrix ci = inv(out.C);
  for (int k = 0; k < generators; ++k) {
    const double a0 = u(rng), a1 = u(rng), b0 = 0.4 + 0.3 * u(rng), b1 = 0.2 * u(rng), c0 = u(rng), c1 = u(rng);
    const LoopMatrix unitary = LoopMatrix::from_function(grid, 2, [&](Complex l) {
      const double t = std::arg(l);
      return MatX(su2(a0 + a1 * std::cos(t), b0 + b1 * std::sin(t), c0 + c1 * std::sin(2.0 * t)));
    });
    out.unitary.push_back(unitary);
    out.generators.push_back(mul(mul(ci, unitary), out.C));
    out.names.push_back("U" + std::to_string(k));
  }
  return out;
}

}  // namespace cmcnoid
