#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmcnoid/loop.hpp"
#include "cmcnoid/ode.hpp"
#include "cmcnoid/potential.hpp"

namespace cmcnoid {

struct MonodromyOptions {
  double ode_tol = 1e-10;
  double loop_radius = 0.25;
};

/// Phi(end) for dPhi = Phi xi along the path with Phi(start) = id. After each
/// accepted step Phi is renormalized to det Phi = 1.
Mat2 integrate_path(const XiFunction& xi, const Path& path, Complex lambda, const OdeOptions& opt,
                    Mat2 initial = Mat2::Identity(), OdeStats* stats = nullptr);
Mat2 integrate_loop(const NoidPotential& pot, const Path& path, Complex lambda, double ode_tol = 1e-10,
                    OdeStats* stats = nullptr);

/// Taylor jets of the monodromy in theta at lambda_p, where lambda = lambda_p e^{i theta}:
/// entry k is the coefficient of theta^k, k = 0..order.
std::vector<Mat2> integrate_jets(const NoidPotential& pot, const Path& path, Complex lambda_p, int order,
                                 double ode_tol = 1e-10);

/// Loops around the integrated punctures: 0 and 1 from basepoint 1/2 for
/// trinoids, z = 1 from basepoint 0 for symmetric n-noids.
std::vector<Path> generator_paths(const NoidPotential& pot, double loop_radius = 0.25);

/// Monodromy of a path sampled over the grid.
LoopMatrix integrate_generator(const NoidPotential& pot, const Path& path, const CircleGrid& grid,
                               double ode_tol = 1e-10);

struct MonodromySet {
  CircleGrid grid;
  NoidPotential pot;
  /// Trinoid: M0, M1, Minf. Symmetric n-noid: M0..M_{n-1}, Minf.
  std::vector<LoopMatrix> generators;
  std::vector<std::string> names;
  /// The ordered product of the generators is id.
  bool relation = true;
  /// g = diag(alpha^{1/2}, alpha^{-1/2}) for symmetric n-noids.
  std::optional<Mat2> symmetry;
  std::vector<Path> paths;

  /// Triple whose product is id used for Goldman and unitarization:
  /// (M0, M1, Minf) or (M0, g, (M0 g)^{-1}).
  std::vector<LoopMatrix> unitarization_triple() const;
  /// Max over samples of |prod generators - id|.
  double relation_residual() const;
};

/// Trinoid: integrates M0, M1 and sets Minf = (M0 M1)^{-1}. Symmetric n-noid:
/// integrates M0 and sets M_k = g^k M0 g^{-k}, Minf = (M0 ... M_{n-1})^{-1}.
MonodromySet build_monodromy_set(const NoidPotential& pot, const CircleGrid& grid,
                                 const MonodromyOptions& opt = {});

/// Generator values at a single lambda (on or off the circle), by the same
/// recipe as build_monodromy_set.
std::vector<Mat2> generators_at(const MonodromySet& ms, Complex lambda, double ode_tol = 1e-10);

struct ClosingReport {
  struct Entry {
    std::string generator;
    Complex lambda;
    double value_residual = 0.0;       // min(|M - id|, |M + id|)
    double derivative_residual = -1.0; // |dM/dlambda|, R3 only; -1 when not evaluated
  };
  std::vector<Entry> entries;
  double max_value_residual() const;
  double max_derivative_residual() const;
};

/// Residuals of the closing conditions at the Sym point(s). Values are
/// integrated directly at each closing point; for R3 the lambda-derivative
/// at 1 is a fourth-order central difference on the grid (step 2 pi / N).
ClosingReport closing_check(const MonodromySet& ms, double ode_tol = 1e-10);

/// t_k = tr M_k / 2.
ScalarLoop trace_loop(const MonodromySet& ms, std::size_t k);

}  // namespace cmcnoid
