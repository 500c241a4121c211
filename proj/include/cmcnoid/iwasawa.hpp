#pragma once

#include "cmcnoid/loop.hpp"

namespace cmcnoid {

struct IwasawaOptions {
  int degree = -1;          // truncation D for B; -1 means N/2 - 1
  double tol = 1e-10;       // max per-sample |B^{-*} P B^{-1} - id| at convergence, raised to
                            // 256 eps cond(P) when roundoff makes tol unattainable
  double tail_tol = 1e-7;   // relative Fourier tail of Phi beyond D
  int max_iterations = 200;
  int damped_iterations = 3;
  double damping = 0.5;
};

struct IwasawaFactors {
  LoopMatrix F;  // unitary at every sample
  LoopMatrix B;  // Fourier support in degrees 0..D, B(0) upper triangular with positive diagonal
  double residual = 0.0;       // max |F B - Phi|
  double unitarity = 0.0;      // max |F* F - id|
  double negative_tail = 0.0;  // max |coefficient of B| at negative degrees
  int iterations = 0;
  double tolerance = 0.0;  // stopping threshold actually used
};

/// Phi = F B with F unitary on the circle and B extending holomorphically to
/// the unit disk. P = Phi* Phi is factored as B* B by the fixed point
/// B <- proj_{[0, D]}((id + K) B) with K + K* = B^{-*} P B^{-1} - id, K made
/// of the positive-degree part plus an upper-triangular constant. Throws
/// TailTooLarge and NoConvergence.
IwasawaFactors iwasawa(const LoopMatrix& phi, const IwasawaOptions& opt = {});

/// sum_{d >= 0} B_d lambda^d from the samples of B.
MatX eval_inside(const LoopMatrix& b, Complex lambda);

}  // namespace cmcnoid
