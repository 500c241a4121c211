#include "cmcnoid/monodromy.hpp"

#include <cmath>

#include "cmcnoid/error.hpp"
#include "cmcnoid/parallel.hpp"

namespace cmcnoid {

namespace {

void renormalize(Mat2& phi) {
  // det stays near 1, so the principal root is the continuous branch.
  phi /= std::sqrt(phi.determinant());
}

Mat2 mat_power(const Mat2& m, int k) {
  Mat2 out = Mat2::Identity();
  const Mat2 base = k >= 0 ? m : Mat2(m.inverse());
  for (int i = 0; i < std::abs(k); ++i) out = out * base;
  return out;
}

}  // namespace

Mat2 integrate_path(const XiFunction& xi, const Path& path, Complex lambda, const OdeOptions& opt, Mat2 initial,
                    OdeStats* stats) {
  Mat2 phi = initial;
  for (const auto& seg : path.segments()) {
    auto rhs = [&](double s, const Mat2& y) -> Mat2 { return y * xi(seg.point(s), lambda) * seg.tangent(s); };
    phi = dopri5<Mat2>(rhs, phi, 0.0, seg.length(), opt, renormalize, stats);
  }
  return phi;
}

Mat2 integrate_loop(const NoidPotential& pot, const Path& path, Complex lambda, double ode_tol, OdeStats* stats) {
  OdeOptions opt;
  opt.tol = ode_tol;
  const XiFunction xi = [&pot](Complex z, Complex l) { return pot.xi_at(z, l); };
  return integrate_path(xi, path, lambda, opt, Mat2::Identity(), stats);
}

std::vector<Mat2> integrate_jets(const NoidPotential& pot, const Path& path, Complex lambda_p, int order,
                                 double ode_tol) {
  if (order < 0) throw Error(ErrorKind::InvalidArgument, "jet order must be non-negative");
  const int blocks = order + 1;
  const Complex l0 = pot.form().lambda0;
  const Complex c = l0 + 1.0 / l0;
  // xi_j = [[0, u_j], [q v_j, 0]] is the theta^j coefficient of xi at lambda_p e^{i theta}.
  std::vector<Complex> u(static_cast<std::size_t>(blocks)), v(static_cast<std::size_t>(blocks));
  double fact = 1.0;
  for (int j = 0; j < blocks; ++j) {
    if (j > 0) fact *= j;
    const Complex ij = std::pow(kI, j), mij = std::pow(-kI, j), i2j = std::pow(2.0 * kI, j);
    u[static_cast<std::size_t>(j)] = mij / (lambda_p * fact);
    v[static_cast<std::size_t>(j)] =
        0.25 * (lambda_p * lambda_p * i2j / fact - c * lambda_p * ij / fact + (j == 0 ? 1.0 : 0.0));
  }
  MatX state = MatX::Zero(2, 2 * blocks);
  state.block(0, 0, 2, 2) = MatX::Identity(2, 2);
  OdeOptions opt;
  opt.tol = ode_tol;
  auto noop = [](MatX&) {};
  for (const auto& seg : path.segments()) {
    auto rhs = [&](double s, const MatX& y) -> MatX {
      const Complex z = seg.point(s);
      (void)pot.xi_at(z, lambda_p);  // pole guard
      const Complex qz = pot.q(z) * seg.tangent(s);
      const Complex dz = seg.tangent(s);
      MatX dy = MatX::Zero(2, 2 * blocks);
      for (int k = 0; k < blocks; ++k) {
        for (int i = 0; i <= k; ++i) {
          const int j = k - i;
          // Phi_i xi_j: columns swap with weights.
          const auto phi = y.block(0, 2 * i, 2, 2);
          dy.block(0, 2 * k, 2, 1) += phi.col(1) * (qz * v[static_cast<std::size_t>(j)]);
          dy.block(0, 2 * k + 1, 2, 1) += phi.col(0) * (dz * u[static_cast<std::size_t>(j)]);
        }
      }
      return dy;
    };
    state = dopri5<MatX>(rhs, state, 0.0, seg.length(), opt, noop);
  }
  std::vector<Mat2> jets;
  for (int k = 0; k < blocks; ++k) jets.emplace_back(state.block(0, 2 * k, 2, 2));
  return jets;
}

std::vector<Path> generator_paths(const NoidPotential& pot, double loop_radius) {
  const Complex base = pot.basepoint();
  if (pot.is_trinoid()) {
    return {Path::loop_around(base, 0.0, loop_radius), Path::loop_around(base, 1.0, loop_radius)};
  }
  // Keep the circle clear of the neighbouring punctures at distance 2 sin(pi/n).
  const double r = std::min(loop_radius, std::sin(kPi / pot.noid().n));
  return {Path::loop_around(base, 1.0, r)};
}

LoopMatrix integrate_generator(const NoidPotential& pot, const Path& path, const CircleGrid& grid, double ode_tol) {
  LoopMatrix out(grid, 2);
  parallel_for(grid.size(), [&](std::size_t j) {
    try {
      out[j] = integrate_loop(pot, path, grid.point(j), ode_tol);
    } catch (const Error& e) {
      throw Error(e.kind(), e.what(), static_cast<int>(j));
    }
  });
  return out;
}

std::vector<LoopMatrix> MonodromySet::unitarization_triple() const {
  if (!symmetry) return {generators[0], generators[1], generators[2]};
  const LoopMatrix g = LoopMatrix::constant(grid, *symmetry);
  return {generators[0], g, inv(mul(generators[0], g))};
}

double MonodromySet::relation_residual() const {
  if (!relation) return 0.0;
  LoopMatrix prod = generators.front();
  for (std::size_t k = 1; k < generators.size(); ++k) prod = mul(prod, generators[k]);
  return max_distance(prod, LoopMatrix::constant(grid, MatX::Identity(2, 2)));
}

MonodromySet build_monodromy_set(const NoidPotential& pot, const CircleGrid& grid, const MonodromyOptions& opt) {
  MonodromySet ms{grid, pot, {}, {}, true, std::nullopt, generator_paths(pot, opt.loop_radius)};
  if (pot.is_trinoid()) {
    LoopMatrix m0 = integrate_generator(pot, ms.paths[0], grid, opt.ode_tol);
    LoopMatrix m1 = integrate_generator(pot, ms.paths[1], grid, opt.ode_tol);
    LoopMatrix minf = inv(mul(m0, m1));
    ms.generators = {m0, m1, minf};
    ms.names = {"M0", "M1", "Minf"};
    return ms;
  }
  const int n = pot.noid().n;
  const Mat2 g = symmetry_matrix(n);
  ms.symmetry = g;
  LoopMatrix m0 = integrate_generator(pot, ms.paths[0], grid, opt.ode_tol);
  LoopMatrix prod = m0;
  ms.generators.push_back(m0);
  ms.names.push_back("M0");
  for (int k = 1; k < n; ++k) {
    const Mat2 gk = mat_power(g, k), gki = mat_power(g, -k);
    LoopMatrix mk = LoopMatrix::from_function(grid, 2, [&](Complex) { return MatX::Zero(2, 2); });
    for (std::size_t j = 0; j < grid.size(); ++j) mk[j] = gk * Mat2(m0[j]) * gki;
    prod = mul(prod, mk);
    ms.generators.push_back(std::move(mk));
    ms.names.push_back("M" + std::to_string(k));
  }
  ms.generators.push_back(inv(prod));
  ms.names.push_back("Minf");
  return ms;
}

std::vector<Mat2> generators_at(const MonodromySet& ms, Complex lambda, double ode_tol) {
  std::vector<Mat2> out;
  if (!ms.symmetry) {
    const Mat2 m0 = integrate_loop(ms.pot, ms.paths[0], lambda, ode_tol);
    const Mat2 m1 = integrate_loop(ms.pot, ms.paths[1], lambda, ode_tol);
    return {m0, m1, (m0 * m1).inverse()};
  }
  const Mat2 g = *ms.symmetry;
  const Mat2 m0 = integrate_loop(ms.pot, ms.paths[0], lambda, ode_tol);
  const int n = ms.pot.noid().n;
  Mat2 prod = Mat2::Identity();
  for (int k = 0; k < n; ++k) {
    out.push_back(mat_power(g, k) * m0 * mat_power(g, -k));
    prod = prod * out.back();
  }
  out.push_back(prod.inverse());
  return out;
}

double ClosingReport::max_value_residual() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.value_residual);
  return m;
}

double ClosingReport::max_derivative_residual() const {
  double m = -1.0;
  for (const auto& e : entries) m = std::max(m, e.derivative_residual);
  return m;
}

ClosingReport closing_check(const MonodromySet& ms, double ode_tol) {
  ClosingReport rep;
  const bool r3 = ms.pot.form().kind == SpaceFormKind::R3;
  const std::size_t n = ms.grid.size();
  const double step = ms.grid.spacing();
  for (const Complex lc : ms.pot.form().closing_points()) {
    const auto values = generators_at(ms, lc, ode_tol);
    for (std::size_t k = 0; k < values.size(); ++k) {
      ClosingReport::Entry e;
      e.generator = ms.names[k];
      e.lambda = lc;
      e.value_residual = std::min((values[k] - Mat2::Identity()).norm(), (values[k] + Mat2::Identity()).norm());
      if (r3) {
        const auto& m = ms.generators[k];
        const MatX d = (MatX(m[n - 2]) / 12.0 - MatX(m[n - 1]) * (2.0 / 3.0) + MatX(m[1]) * (2.0 / 3.0) -
                        MatX(m[2]) / 12.0) /
                       step;
        // dM/dlambda = dM/dtheta / (i lambda) and |lambda| = 1.
        e.derivative_residual = d.norm();
      }
      rep.entries.push_back(e);
    }
  }
  return rep;
}

ScalarLoop trace_loop(const MonodromySet& ms, std::size_t k) {
  ScalarLoop t = trace(ms.generators.at(k));
  for (auto& v : t) v *= 0.5;
  return t;
}

}  // namespace cmcnoid
