#include "cmcnoid/iwasawa.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "cmcnoid/error.hpp"

namespace cmcnoid {

namespace {

constexpr double kRoundoffFloorFactor = 256.0;

std::string scientific(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

// Keeps spectrum degrees in [lo, hi]; index k holds degree k - N/2.
LoopMatrix band(const LoopMatrix& f, int lo, int hi) {
  auto spec = full_spectrum(f);
  const int half = static_cast<int>(f.size() / 2);
  for (int d = -half; d < half; ++d) {
    if (d < lo || d > hi) spec[static_cast<std::size_t>(d + half)].setZero();
  }
  return from_spectrum(f.grid(), spec);
}

double max_deviation_from_identity(const LoopMatrix& g) {
  const MatX id = MatX::Identity(g.dim(), g.dim());
  double m = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) m = std::max(m, (MatX(g[j]) - id).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

IwasawaFactors iwasawa(const LoopMatrix& phi, const IwasawaOptions& opt) {
  const int n = phi.dim();
  const int half = static_cast<int>(phi.size() / 2);
  const int degree = opt.degree < 0 ? half - 1 : opt.degree;
  if (degree > half - 1) throw Error(ErrorKind::DegreeTooLarge, "Iwasawa degree exceeds N/2 - 1");

  if (degree < half - 1) {
    const double tail = tail_energy(phi, degree);
    const double scale = std::max(phi.max_norm(), 1.0);
    if (tail > opt.tail_tol * scale) {
      throw Error(ErrorKind::TailTooLarge, "Fourier tail of the loop beyond degree " + std::to_string(degree) +
                                               " is " + scientific(tail));
    }
  }

  const LoopMatrix p = mul(star(phi), phi);

  // Roundoff in B^{-*} P B^{-1} grows with the condition number of P, so the
  // attainable residual is about eps cond(P); the stopping test never asks
  // for less than a fixed multiple of that floor.
  const LoopMatrix phi_inv = inv(phi);
  double cond_p = 1.0;
  for (std::size_t j = 0; j < phi.size(); ++j) {
    const double c = MatX(phi[j]).norm() * MatX(phi_inv[j]).norm();
    cond_p = std::max(cond_p, c * c);
  }
  const double tol = std::max(opt.tol, kRoundoffFloorFactor * std::numeric_limits<double>::epsilon() * cond_p);
  const MatX id = MatX::Identity(n, n);

  // Start from the constant upper Cholesky factor of the mean of P.
  MatX p0 = MatX::Zero(n, n);
  for (std::size_t j = 0; j < p.size(); ++j) p0 += p[j];
  p0 /= static_cast<double>(p.size());
  p0 = (0.5 * (p0 + p0.adjoint())).eval();
  Eigen::LLT<MatX> llt(p0);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "mean of Phi* Phi not positive");
  LoopMatrix b = LoopMatrix::constant(phi.grid(), MatX(llt.matrixU()));

  IwasawaFactors out;
  out.tolerance = tol;
  double residual = 0.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const LoopMatrix bi = inv(b);
    LoopMatrix g = mul(mul(star(bi), p), bi);
    residual = max_deviation_from_identity(g);
    out.iterations = it;
    if (residual < tol) break;
    for (std::size_t j = 0; j < g.size(); ++j) g[j] -= id;
    // K = G_+ + K0, with K0 + K0* = G_0 and K0 upper triangular.
    auto spec = full_spectrum(g);
    for (int d = -half; d < 0; ++d) spec[static_cast<std::size_t>(d + half)].setZero();
    MatX& g0 = spec[static_cast<std::size_t>(half)];
    MatX k0 = MatX::Zero(n, n);
    for (int r = 0; r < n; ++r) {
      k0(r, r) = 0.5 * g0(r, r).real();
      for (int c = r + 1; c < n; ++c) k0(r, c) = g0(r, c);
    }
    g0 = k0;
    LoopMatrix k = from_spectrum(phi.grid(), spec);
    const double step = it < opt.damped_iterations ? opt.damping : 1.0;
    LoopMatrix update(phi.grid(), n);
    for (std::size_t j = 0; j < update.size(); ++j) update[j] = id + step * MatX(k[j]);
    b = band(mul(update, b), 0, degree);
  }
  if (residual >= tol) {
    throw Error(ErrorKind::NoConvergence, "Iwasawa iteration stalled after " + std::to_string(opt.max_iterations) +
                                              " iterations, residual " + scientific(residual));
  }

  // Normalize B(0) to upper triangular with positive diagonal by a constant unitary.
  const MatX b0 = full_spectrum(b)[static_cast<std::size_t>(half)];
  Eigen::HouseholderQR<MatX> qr(b0);
  MatX q = qr.householderQ();
  MatX r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    const Complex d = r(i, i);
    const Complex phase = std::abs(d) > 0.0 ? d / std::abs(d) : Complex(1.0);
    q.col(i) *= phase;
  }
  const MatX qh = q.adjoint();
  for (std::size_t j = 0; j < b.size(); ++j) b[j] = qh * MatX(b[j]);

  out.B = b;
  out.F = mul(phi, inv(b));
  LoopMatrix fb = mul(out.F, out.B);
  out.residual = max_distance(fb, phi);
  out.unitarity = max_deviation_from_identity(mul(star(out.F), out.F));
  const auto spec = full_spectrum(out.B);
  for (int d = -half; d < 0; ++d) {
    out.negative_tail = std::max(out.negative_tail, spec[static_cast<std::size_t>(d + half)].cwiseAbs().maxCoeff());
  }
  return out;
}

MatX eval_inside(const LoopMatrix& b, Complex lambda) {
  const auto spec = full_spectrum(b);
  const int half = static_cast<int>(b.size() / 2);
  MatX acc = MatX::Zero(b.dim(), b.dim());
  for (int d = half - 1; d >= 0; --d) acc = (acc * lambda + spec[static_cast<std::size_t>(d + half)]).eval();
  return acc;
}

}  // namespace cmcnoid
