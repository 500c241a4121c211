#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace cmcnoid {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

// Pauli matrices; the su(2) <-> R^3 identification uses them.
inline Mat2 pauli(int k) {
  Mat2 s;
  switch (k) {
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -kI, kI, 0; break;
    default: s << 1, 0, 0, -1; break;
  }
  return s;
}

}  // namespace cmcnoid
