#pragma once

#include <cstddef>
#include <vector>

#include "cmcnoid/types.hpp"

namespace cmcnoid {

/// Fornberg weights w[m][k] for the m-th derivative at x0 from values at
/// nodes[k], for m = 0..max_order.
std::vector<std::vector<double>> fornberg_weights(double x0, const std::vector<double>& nodes,
                                                  int max_order);

/// Central stencil offsets -half..half (in units of the step).
std::vector<double> central_nodes(int half_width);

/// order-th derivative of f at t0 from a symmetric stencil of 2*half_width+1
/// evaluations spaced h apart.
template <class Fn>
MatX central_derivative(Fn&& f, double t0, int order, double h, int half_width) {
  const auto nodes = central_nodes(half_width);
  const auto w = fornberg_weights(0.0, nodes, order);
  MatX acc;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double weight = w[static_cast<std::size_t>(order)][k];
    if (weight == 0.0) continue;
    MatX value = f(t0 + nodes[k] * h);
    if (acc.size() == 0) acc = MatX::Zero(value.rows(), value.cols());
    acc += weight * value;
  }
  double scale = 1.0;
  for (int i = 0; i < order; ++i) scale /= h;
  return acc * scale;
}

}  // namespace cmcnoid
