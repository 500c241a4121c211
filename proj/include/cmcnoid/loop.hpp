#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "cmcnoid/types.hpp"

namespace cmcnoid {

/// Uniform samples lambda_j = exp(2 pi i j / N) of the unit circle. N is a
/// power of two so that FFTs are exact and the index pairing j <-> N - j
/// realises lambda -> conj(lambda).
class CircleGrid {
 public:
  static constexpr std::size_t kDefaultSize = 256;

  explicit CircleGrid(std::size_t size = kDefaultSize);

  std::size_t size() const noexcept { return size_; }
  double angle(std::size_t j) const noexcept;
  Complex point(std::size_t j) const noexcept;
  double spacing() const noexcept;
  /// Index of the sample nearest to exp(i theta).
  std::size_t nearest(double theta) const noexcept;

  friend bool operator==(const CircleGrid&, const CircleGrid&) = default;

 private:
  std::size_t size_;
};

/// Truncated Laurent series F(lambda) = sum_{d=-D}^{D} F_d lambda^d.
struct FourierSeries {
  int degree = 0;
  std::vector<MatX> coeffs;  // coeffs[d + degree]
  double tail_energy = 0.0;  // max |coefficient| over |d| > degree

  const MatX& coefficient(int d) const { return coeffs.at(static_cast<std::size_t>(d + degree)); }
  MatX evaluate(Complex lambda) const;
};

using ScalarLoop = std::vector<Complex>;

/// An n x n matrix-valued loop sampled on a CircleGrid. Samples are stored
/// contiguously (column-major per sample) and exposed as Eigen maps.
class LoopMatrix {
 public:
  LoopMatrix() = default;
  LoopMatrix(const CircleGrid& grid, int dim);

  static LoopMatrix constant(const CircleGrid& grid, const MatX& value);
  template <class Fn>
  static LoopMatrix from_function(const CircleGrid& grid, int dim, Fn&& fn) {
    LoopMatrix out(grid, dim);
    for (std::size_t j = 0; j < grid.size(); ++j) out[j] = fn(grid.point(j));
    return out;
  }

  const CircleGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return grid_.size(); }

  Eigen::Map<MatX> operator[](std::size_t j) {
    return {values_.data() + j * stride(), dim_, dim_};
  }
  Eigen::Map<const MatX> operator[](std::size_t j) const {
    return {values_.data() + j * stride(), dim_, dim_};
  }

  /// True when |det - 1| <= tol at every sample.
  bool special(double tol = 1e-9) const;
  double max_norm() const;

  const std::optional<FourierSeries>& fourier() const noexcept { return fourier_; }
  void set_fourier(FourierSeries series) { fourier_ = std::move(series); }
  void clear_fourier() { fourier_.reset(); }

  const std::vector<Complex>& raw() const noexcept { return values_; }

 private:
  std::size_t stride() const noexcept { return static_cast<std::size_t>(dim_ * dim_); }

  CircleGrid grid_{};
  int dim_ = 0;
  std::vector<Complex> values_;
  std::optional<FourierSeries> fourier_;
};

/// F*(lambda) = conj(F(1/conj(lambda)))^T; pointwise conjugate transpose on
/// the circle. Fourier data, when present, maps degree d to degree -d.
LoopMatrix star(const LoopMatrix& f);
LoopMatrix mul(const LoopMatrix& a, const LoopMatrix& b);
LoopMatrix add(const LoopMatrix& a, const LoopMatrix& b);
LoopMatrix scale(const LoopMatrix& a, Complex s);
/// Throws SingularSample(j) when |det A_j| < floor_rel * max_j |A_j|^n.
LoopMatrix inv(const LoopMatrix& a, double floor_rel = 1e-13);
ScalarLoop det(const LoopMatrix& a);
ScalarLoop trace(const LoopMatrix& a);
LoopMatrix commutator(const LoopMatrix& a, const LoopMatrix& b);
double max_distance(const LoopMatrix& a, const LoopMatrix& b);

/// Entrywise DFT truncated to degrees [-D, D]. Requires N >= 2D + 2.
LoopMatrix fourier_analyze(const LoopMatrix& f, int degree);
/// All N Laurent coefficients, index k holds degree k - N/2.
std::vector<MatX> full_spectrum(const LoopMatrix& f);
LoopMatrix from_spectrum(const CircleGrid& grid, const std::vector<MatX>& spectrum);
/// Max coefficient magnitude over degrees |d| > D.
double tail_energy(const LoopMatrix& f, int degree);
/// Relative size below which Laurent coefficients are dropped off the circle.
inline constexpr double kOffCircleCoefficientFloor = 1e-14;
/// Trigonometric interpolation of the samples, evaluated at lambda. For
/// |lambda| != 1 the Laurent series of the full spectrum is evaluated with
/// roundoff-level coefficients dropped.
MatX evaluate(const LoopMatrix& f, Complex lambda);
/// k-th derivative in theta (lambda = e^{i theta}) evaluated at lambda.
MatX evaluate_theta_derivative(const LoopMatrix& f, Complex lambda, int order);
/// Spectral theta-derivative of the whole loop.
LoopMatrix theta_derivative(const LoopMatrix& f);

// Loop dump/restore. CSV rows are "j,re_0_0,im_0_0,re_0_1,im_0_1,..." with
// entries in row-major order. The binary layout is the 8-byte magic
// "CMCLOOP1", uint32 dim, uint32 N, then N*dim*dim (re, im) float64 pairs,
// row-major per sample, little-endian.
void write_loop_csv(const LoopMatrix& f, const std::filesystem::path& path);
LoopMatrix read_loop_csv(const std::filesystem::path& path);
void write_loop_binary(const LoopMatrix& f, const std::filesystem::path& path);
LoopMatrix read_loop_binary(const std::filesystem::path& path);

}  // namespace cmcnoid
