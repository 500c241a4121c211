#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmcnoid/iwasawa.hpp"
#include "cmcnoid/loop.hpp"
#include "cmcnoid/monodromy.hpp"
#include "cmcnoid/potential.hpp"

namespace cmcnoid {

struct UnitarizeOptions {
  double t_tol = 1e-8;          // |T| <= t_tol marks the zero set
  double imag_tol = 1e-8;       // traces with |Im t| above this are reported as non-real
  double herm_tol = 1e-8;       // relative anti-Hermitian part accepted as Hermitian
  double chol_tol = 1e-9;       // max |V* V - X| after Cholesky
  double sep_floor = 1e-4;      // sigma_2 / sigma_max below this means dim ker L > 1
  double degenerate_ratio = 1e-2;  // sigma_min / sigma_2 above this marks a degenerate sample
  int max_window = 5;           // degenerate samples repaired per degenerate point
  std::uint64_t seed = 0;       // random phases applied to raw singular vectors
  bool iwasawa_positive_part = true;  // also compute C+ from the Iwasawa factors of V
  IwasawaOptions iwasawa;
};

enum class Verdict { Unitarizable, Reducible, NotUnitarizable };
std::string to_string(Verdict v);

/// T = 1 - t1^2 - t2^2 - t3^2 + 2 t1 t2 t3.
double goldman_T(double t1, double t2, double t3);

struct GoldmanReport {
  std::vector<double> T;
  std::vector<std::size_t> zero_set;  // |T| <= t_tol
  std::vector<Verdict> verdicts;
  double max_imag_trace = 0.0;
  /// First sample whose traces are not real within imag_tol, if any.
  std::optional<std::size_t> first_non_real;
  /// First sample with verdict NotUnitarizable, if any.
  std::optional<std::size_t> first_not_unitarizable() const;
};

/// Traces are half-traces t_k = tr M_k / 2 sampled on one grid; imaginary
/// parts within imag_tol are dropped and real parts clamped to [-1, 1].
GoldmanReport goldman_T(const ScalarLoop& t1, const ScalarLoop& t2, const ScalarLoop& t3,
                        const UnitarizeOptions& opt = {});
/// Goldman report of the unitarization triple of a monodromy set.
GoldmanReport goldman_report(const MonodromySet& ms, const UnitarizeOptions& opt = {});

struct InequalityCheck {
  std::string id;
  std::string description;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;  // lhs < rhs strictly
};

struct AdmissibilityReport {
  std::vector<InequalityCheck> checks;
  bool admissible() const;
  /// Id of the first failing check, empty when admissible.
  std::string first_failure() const;
};

/// With n_k = rho_{w_k}(-1), m_k = rho_{w_k}(1): sum |n| < 1 and the |n|
/// triangle inequalities for every form; the same for m off R3; the weight
/// triangle inequalities for R3. A complex rho at +-1 fails check "radicand".
AdmissibilityReport trinoid_admissible(const Trinoid& t, const SpaceForm& form);
/// |rho(1)| < 1/n and |rho(-1)| < 1/n.
AdmissibilityReport nnoid_admissible(const SymmetricNoid& s, const SpaceForm& form);
AdmissibilityReport admissible(const SpaceForm& form, const NoidVariant& variant);

/// L(X) = (X M_k - M_k^{-*} X)_k at one sample; M^{-*} is the inverse conjugate transpose.
std::vector<MatX> L_apply(const MatX& x, const std::vector<MatX>& ms);
/// Matrix of L acting on column-major vec(X): rows q n^2, columns n^2.
MatX flatten_L(const std::vector<MatX>& ms);

struct KernelResult {
  LoopMatrix X;  // Hermitian positive definite, det 1
  std::vector<double> sigma_min, sigma_2, sigma_max;
  std::vector<std::size_t> degenerate;  // samples reconstructed by the trigonometric fit
  std::vector<double> kernel_residual;  // max_k |L(X)_k| per sample
  double fit_residual = 0.0;            // max fit error on the non-degenerate samples
};

/// Per-sample one-dimensional kernel of L, phase aligned, Hermitianized,
/// sign selected with f = v* X v for v = (1, 0.37 + 0.21i) and normalized to
/// det 1. Degenerate samples (kernel not separated) are refilled from a
/// least-squares trigonometric fit of the others. Throws KernelDimensionHigh
/// and NotPositive.
KernelResult kernel_loop(const std::vector<LoopMatrix>& ms, const UnitarizeOptions& opt = {});

/// Upper triangular V with positive diagonal and X = V* V at every sample.
/// Throws NotPositiveDefinite.
LoopMatrix cholesky_loop(const LoopMatrix& x, double chol_tol = 1e-9);

/// |(V M V^{-1})* (V M V^{-1}) - id| (Frobenius) per sample.
std::vector<double> unitarity_residuals(const LoopMatrix& v, const LoopMatrix& m);

struct UnitarizerResult {
  KernelResult kernel;
  LoopMatrix X;
  LoopMatrix V;
  std::optional<LoopMatrix> C_plus;
  std::vector<std::string> names;
  std::vector<std::vector<double>> residuals;         // per generator, per sample, for V
  std::vector<std::vector<double>> residuals_c_plus;  // same for C+, when computed
  double coverage_residual = 0.0;  // words in the generators conjugated by V
  double max_residual() const;
  double max_residual_c_plus() const;
};

UnitarizerResult unitarize(const std::vector<LoopMatrix>& generators, const std::vector<std::string>& names,
                           const UnitarizeOptions& opt = {});
UnitarizerResult unitarize(const MonodromySet& ms, const UnitarizeOptions& opt = {});

struct SeriesCheck {
  Complex point;
  std::string subject;  // generator or pair name
  std::string property;
  bool holds = false;
  std::string detail;
};

struct IdentityCheck {
  std::string name;
  Complex point;
  Complex measured;  // finite differences of directly integrated monodromy
  Complex jet;       // same quantity from Taylor jets
  Complex expected;  // closed form
  double relative_error = 0.0;
  bool holds = false;  // relative_error < identity_tol
};

struct HypothesisReport {
  std::vector<SeriesCheck> series_checks;
  std::vector<IdentityCheck> identities;
  double chi = 0.0;
  double goldman_consistency = 0.0;   // max |det [A, B] - 4 T| on the grid
  bool goldman_consistent = false;
  double min_commutator_det = 0.0;    // min |det [A, B]| off the zero set
  std::size_t zero_set_size = 0;
  bool all_hold() const;
};

struct HypothesisOptions {
  int jet_order = 8;
  double jet_ode_tol = 1e-12;
  double fd_step = 0.05;  // theta step for the finite-difference stencil
  int fd_half_width = 6;
  double identity_tol = 1e-3;
  double goldman_tol = 1e-7;
};

/// Series checks at each closing point (locally diagonalizable generators,
/// infinitesimally irreducible pair), commutator rank elsewhere, and the
/// closed-form commutator-determinant identities.
HypothesisReport verify_hypotheses(const MonodromySet& ms, const UnitarizeOptions& opt = {},
                                   const HypothesisOptions& hopt = {});

/// Known-answer fixture: M_k = C^{-1} U_k C with smooth SU(2) loops U_k and
/// the special loop C = A (id + (0.3 lambda + 0.2 / lambda) E_12). Any
/// unitarizer V satisfies V C^{-1} unitary, and X = C* C.
struct ConjugatedUnitaryFixture {
  std::vector<LoopMatrix> generators;
  std::vector<std::string> names;
  std::vector<LoopMatrix> unitary;
  LoopMatrix C;
};
ConjugatedUnitaryFixture conjugated_unitary_fixture(const CircleGrid& grid, std::uint64_t seed, int generators = 3);

/// Binomial coefficient b_{r,s}.
double binomial(int r, int s);

}  // namespace cmcnoid
