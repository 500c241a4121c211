#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "cmcnoid/loop.hpp"
#include "cmcnoid/types.hpp"

namespace cmcnoid {

enum class SpaceFormKind { R3, S3, H3 };

std::string to_string(SpaceFormKind kind);
SpaceFormKind space_form_from_string(const std::string& name);

/// Ambient space form and its Sym point. For H3 the Sym point lambda0 = s
/// lies inside the unit disk.
struct SpaceForm {
  SpaceFormKind kind = SpaceFormKind::R3;
  Complex lambda0{1.0, 0.0};
  Complex mu{1.0, 0.0};  // S3 only: mu = lambda0^{-2}
  double s = 0.0;        // H3 only

  static SpaceForm r3();
  /// lambda0 on the unit circle away from +-1.
  static SpaceForm s3(Complex lambda0);
  /// 0 < |s| < 1.
  static SpaceForm h3(double s);

  /// Points where every monodromy must equal id: {1} for R3, {lambda0, 1/lambda0} otherwise.
  std::vector<Complex> closing_points() const;
  /// Mean curvature implied by the Sym point.
  double mean_curvature() const;
};

/// h(lambda) = (1/4) lambda^{-1} (lambda - lambda0)(lambda - lambda0^{-1}).
Complex h(Complex lambda, Complex lambda0);
/// rho_w = 1/2 - sqrt(1 + w h)/2, principal branch. Throws NegativeRadicand
/// when lambda is on the circle and the real radicand is negative.
Complex rho(Complex lambda, double w, Complex lambda0);

struct Trinoid {
  double w0 = 0.0;
  double w1 = 0.0;
  double winf = 0.0;
};

struct SymmetricNoid {
  int n = 3;
  double w = 0.0;
};

using NoidVariant = std::variant<Trinoid, SymmetricNoid>;

/// The DPW potential xi = [[0, lambda^{-1}], [lambda h(lambda) q(z), 0]] dz.
class NoidPotential {
 public:
  static constexpr double kDefaultPoleGuard = 1e-3;

  /// Checks nonzero weights and 1 + w h >= 0 on the validation grid.
  NoidPotential(SpaceForm form, NoidVariant variant, const CircleGrid& validation_grid = CircleGrid());

  const SpaceForm& form() const noexcept { return form_; }
  const NoidVariant& variant() const noexcept { return variant_; }
  bool is_trinoid() const noexcept { return std::holds_alternative<Trinoid>(variant_); }
  const Trinoid& trinoid() const { return std::get<Trinoid>(variant_); }
  const SymmetricNoid& noid() const { return std::get<SymmetricNoid>(variant_); }

  /// 1/2 for trinoids, 0 for symmetric n-noids.
  Complex basepoint() const noexcept;
  /// Finite double poles of Q.
  std::vector<Complex> poles() const;
  /// Pole weights: (w0, w1, winf) or the common w.
  std::vector<double> weights() const;

  double pole_guard() const noexcept { return pole_guard_; }
  void set_pole_guard(double r) noexcept { pole_guard_ = r; }

  /// q = Q / dz^2.
  Complex q(Complex z) const;
  /// Coefficient of dz in xi; PoleHit within pole_guard of a finite pole.
  Mat2 xi_at(Complex z, Complex lambda) const;

 private:
  SpaceForm form_;
  NoidVariant variant_;
  double pole_guard_ = kDefaultPoleGuard;
};

/// Coefficient function (z, lambda) -> A with xi = A dz.
using XiFunction = std::function<Mat2(Complex, Complex)>;
using GaugeFunction = std::function<Mat2(Complex, Complex)>;

/// xi.g = g^{-1} xi g + g^{-1} dg. Without dg, dg/dz is taken from a
/// four-point complex stencil (exact to fourth order for holomorphic g).
/// The result throws SingularGauge where g is numerically singular.
XiFunction gauge(XiFunction xi, GaugeFunction g, GaugeFunction dg = {});

/// g = [[z, 0], [-lambda, z^{-1}]], which makes a symmetric n-noid potential
/// holomorphic at infinity.
Mat2 infinity_gauge(Complex z, Complex lambda);
Mat2 infinity_gauge_derivative(Complex z, Complex lambda);

/// g = diag(alpha^{1/2}, alpha^{-1/2}) with alpha = exp(2 pi i / n).
Mat2 symmetry_matrix(int n);

/// chi = (w0+w1+winf)(-w0+w1+winf)(w0-w1+winf)(w0+w1-winf).
double chi(double w0, double w1, double winf);

}  // namespace cmcnoid
