#include "cmcnoid/potential.hpp"

#include <cmath>

#include <Eigen/LU>

#include "cmcnoid/error.hpp"

namespace cmcnoid {

std::string to_string(SpaceFormKind kind) {
  switch (kind) {
    case SpaceFormKind::R3: return "R3";
    case SpaceFormKind::S3: return "S3";
    case SpaceFormKind::H3: return "H3";
  }
  return "?";
}

SpaceFormKind space_form_from_string(const std::string& name) {
  if (name == "R3") return SpaceFormKind::R3;
  if (name == "S3") return SpaceFormKind::S3;
  if (name == "H3") return SpaceFormKind::H3;
  throw Error(ErrorKind::InvalidArgument, "unknown space form '" + name + "'");
}

SpaceForm SpaceForm::r3() { return {}; }

SpaceForm SpaceForm::s3(Complex lambda0) {
  if (std::abs(std::abs(lambda0) - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "S3 Sym point must lie on the unit circle");
  }
  if (std::abs(lambda0 - 1.0) < 1e-9 || std::abs(lambda0 + 1.0) < 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "S3 Sym point must differ from +-1");
  }
  SpaceForm f;
  f.kind = SpaceFormKind::S3;
  f.lambda0 = lambda0 / std::abs(lambda0);
  f.mu = 1.0 / (f.lambda0 * f.lambda0);
  return f;
}

SpaceForm SpaceForm::h3(double s) {
  if (!(std::abs(s) > 0.0 && std::abs(s) < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "H3 Sym point must satisfy 0 < |s| < 1");
  }
  SpaceForm f;
  f.kind = SpaceFormKind::H3;
  f.s = s;
  f.lambda0 = Complex(s, 0.0);
  return f;
}

std::vector<Complex> SpaceForm::closing_points() const {
  if (kind == SpaceFormKind::R3) return {Complex(1.0, 0.0)};
  return {lambda0, 1.0 / lambda0};
}

double SpaceForm::mean_curvature() const {
  switch (kind) {
    case SpaceFormKind::R3: return 1.0;
    case SpaceFormKind::S3: {
      // H = i (1 + mu) / (1 - mu) with mu = lambda0^{-2}; real for |lambda0| = 1.
      return (kI * (1.0 + mu) / (1.0 - mu)).real();
    }
    case SpaceFormKind::H3: return (1.0 + s * s) / (1.0 - s * s);
  }
  return 1.0;
}

Complex h(Complex lambda, Complex lambda0) {
  return 0.25 / lambda * (lambda - lambda0) * (lambda - 1.0 / lambda0);
}

Complex rho(Complex lambda, double w, Complex lambda0) {
  const Complex radicand = 1.0 + w * h(lambda, lambda0);
  if (std::abs(std::abs(lambda) - 1.0) < 1e-12 && std::abs(radicand.imag()) < 1e-12 * (1.0 + std::abs(radicand)) &&
      radicand.real() < -1e-14) {
    throw Error(ErrorKind::NegativeRadicand,
                "1 + w h(lambda) = " + std::to_string(radicand.real()) + " < 0 on the unit circle");
  }
  if (std::abs(radicand.imag()) < 1e-14 && radicand.real() < 0.0) return 0.5;  // roundoff at a zero
  return 0.5 - 0.5 * std::sqrt(radicand);
}

NoidPotential::NoidPotential(SpaceForm form, NoidVariant variant, const CircleGrid& validation_grid)
    : form_(form), variant_(std::move(variant)) {
  if (const auto* s = std::get_if<SymmetricNoid>(&variant_)) {
    if (s->n < 3) throw Error(ErrorKind::InvalidArgument, "symmetric n-noid needs n >= 3");
  }
  for (double w : weights()) {
    if (w == 0.0) throw Error(ErrorKind::InvalidArgument, "pole weights must be nonzero");
    for (std::size_t j = 0; j < validation_grid.size(); ++j) {
      rho(validation_grid.point(j), w, form_.lambda0);
    }
  }
}

Complex NoidPotential::basepoint() const noexcept {
  return is_trinoid() ? Complex(0.5, 0.0) : Complex(0.0, 0.0);
}

std::vector<Complex> NoidPotential::poles() const {
  if (is_trinoid()) return {Complex(0.0), Complex(1.0)};
  const int n = noid().n;
  std::vector<Complex> out;
  for (int k = 0; k < n; ++k) out.push_back(std::exp(2.0 * kPi * kI * static_cast<double>(k) / static_cast<double>(n)));
  return out;
}

std::vector<double> NoidPotential::weights() const {
  if (is_trinoid()) return {trinoid().w0, trinoid().w1, trinoid().winf};
  return {noid().w};
}

Complex NoidPotential::q(Complex z) const {
  if (is_trinoid()) {
    const auto& t = trinoid();
    const Complex num = t.winf * z * z + (t.w1 - t.w0 - t.winf) * z + t.w0;
    return num / (4.0 * z * z * (z - 1.0) * (z - 1.0));
  }
  const auto& s = noid();
  const Complex zn = std::pow(z, s.n);
  const Complex zn2 = s.n == 2 ? Complex(1.0) : std::pow(z, s.n - 2);
  return static_cast<double>(s.n * s.n) * s.w * zn2 / (4.0 * (zn - 1.0) * (zn - 1.0));
}

Mat2 NoidPotential::xi_at(Complex z, Complex lambda) const {
  for (const auto& p : poles()) {
    if (std::abs(z - p) < pole_guard_) {
      throw Error(ErrorKind::PoleHit, "integration point within the pole guard of a puncture");
    }
  }
  Mat2 a;
  a << 0.0, 1.0 / lambda, lambda * h(lambda, form_.lambda0) * q(z), 0.0;
  return a;
}

XiFunction gauge(XiFunction xi, GaugeFunction g, GaugeFunction dg) {
  return [xi = std::move(xi), g = std::move(g), dg = std::move(dg)](Complex z, Complex lambda) -> Mat2 {
    const Mat2 gz = g(z, lambda);
    const Complex d = gz.determinant();
    if (std::abs(d) < 1e-13 * std::max(1.0, gz.squaredNorm())) {
      throw Error(ErrorKind::SingularGauge, "gauge is singular at the evaluation point");
    }
    const Mat2 gi = gz.inverse();
    Mat2 dgz;
    if (dg) {
      dgz = dg(z, lambda);
    } else {
      const double step = 1e-3 * std::max(1.0, std::abs(z));
      dgz.setZero();
      Complex unit(1.0, 0.0);
      for (int k = 0; k < 4; ++k) {
        dgz += g(z + step * unit, lambda) / unit;
        unit *= kI;
      }
      dgz /= 4.0 * step;
    }
    return gi * xi(z, lambda) * gz + gi * dgz;
  };
}

Mat2 infinity_gauge(Complex z, Complex lambda) {
  Mat2 g;
  g << z, 0.0, -lambda, 1.0 / z;
  return g;
}

Mat2 infinity_gauge_derivative(Complex z, Complex /*lambda*/) {
  Mat2 g;
  g << 1.0, 0.0, 0.0, -1.0 / (z * z);
  return g;
}

Mat2 symmetry_matrix(int n) {
  const double a = kPi / static_cast<double>(n);
  Mat2 g = Mat2::Zero();
  g(0, 0) = std::exp(kI * a);
  g(1, 1) = std::exp(-kI * a);
  return g;
}

double chi(double w0, double w1, double winf) {
  return (w0 + w1 + winf) * (-w0 + w1 + winf) * (w0 - w1 + winf) * (w0 + w1 - winf);
}

}  // namespace cmcnoid
