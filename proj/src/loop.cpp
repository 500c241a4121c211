#include "cmcnoid/loop.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <unsupported/Eigen/FFT>

#include "cmcnoid/error.hpp"

namespace cmcnoid {

CircleGrid::CircleGrid(std::size_t size) : size_(size) {
  if (size < 4 || !std::has_single_bit(size)) {
    throw Error(ErrorKind::InvalidArgument,
                "circle grid size must be a power of two >= 4, got " + std::to_string(size));
  }
}

double CircleGrid::angle(std::size_t j) const noexcept {
  return 2.0 * kPi * static_cast<double>(j) / static_cast<double>(size_);
}

Complex CircleGrid::point(std::size_t j) const noexcept { return std::polar(1.0, angle(j)); }

double CircleGrid::spacing() const noexcept { return 2.0 * kPi / static_cast<double>(size_); }

std::size_t CircleGrid::nearest(double theta) const noexcept {
  const double n = static_cast<double>(size_);
  long k = std::lround(theta / spacing());
  k %= static_cast<long>(n);
  if (k < 0) k += static_cast<long>(n);
  return static_cast<std::size_t>(k);
}

MatX FourierSeries::evaluate(Complex lambda) const {
  MatX out = MatX::Zero(coeffs.front().rows(), coeffs.front().cols());
  Complex power = std::pow(lambda, -degree);
  for (int d = -degree; d <= degree; ++d) {
    out += coefficient(d) * power;
    power *= lambda;
  }
  return out;
}

LoopMatrix::LoopMatrix(const CircleGrid& grid, int dim)
    : grid_(grid), dim_(dim), values_(grid.size() * static_cast<std::size_t>(dim * dim)) {
  if (dim <= 0) throw Error(ErrorKind::InvalidArgument, "loop dimension must be positive");
}

LoopMatrix LoopMatrix::constant(const CircleGrid& grid, const MatX& value) {
  LoopMatrix out(grid, static_cast<int>(value.rows()));
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = value;
  return out;
}

bool LoopMatrix::special(double tol) const {
  for (std::size_t j = 0; j < size(); ++j) {
    if (std::abs((*this)[j].determinant() - 1.0) > tol) return false;
  }
  return true;
}

double LoopMatrix::max_norm() const {
  double m = 0.0;
  for (std::size_t j = 0; j < size(); ++j) m = std::max(m, (*this)[j].norm());
  return m;
}

namespace {

void require_compatible(const LoopMatrix& a, const LoopMatrix& b) {
  if (a.grid() != b.grid() || a.dim() != b.dim()) {
    throw Error(ErrorKind::InvalidArgument, "loops live on different grids or dimensions");
  }
}

}  // namespace

LoopMatrix star(const LoopMatrix& f) {
  LoopMatrix out(f.grid(), f.dim());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j].adjoint();
  if (f.fourier()) {
    FourierSeries s = *f.fourier();
    for (int d = -s.degree; d <= s.degree; ++d) {
      s.coeffs[static_cast<std::size_t>(d + s.degree)] = f.fourier()->coefficient(-d).adjoint();
    }
    out.set_fourier(std::move(s));
  }
  return out;
}

LoopMatrix mul(const LoopMatrix& a, const LoopMatrix& b) {
  require_compatible(a, b);
  LoopMatrix out(a.grid(), a.dim());
  for (std::size_t j = 0; j < a.size(); ++j) out[j].noalias() = a[j] * b[j];
  return out;
}

LoopMatrix add(const LoopMatrix& a, const LoopMatrix& b) {
  require_compatible(a, b);
  LoopMatrix out(a.grid(), a.dim());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] + b[j];
  return out;
}

LoopMatrix scale(const LoopMatrix& a, Complex s) {
  LoopMatrix out(a.grid(), a.dim());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = s * a[j];
  return out;
}

LoopMatrix inv(const LoopMatrix& a, double floor_rel) {
  const double floor = floor_rel * std::pow(a.max_norm(), a.dim());
  LoopMatrix out(a.grid(), a.dim());
  for (std::size_t j = 0; j < a.size(); ++j) {
    const Complex d = a[j].determinant();
    if (std::abs(d) < floor) {
      throw Error(ErrorKind::SingularSample, "determinant below floor at sample " + std::to_string(j),
                  static_cast<int>(j));
    }
    out[j] = a[j].inverse();
  }
  return out;
}

ScalarLoop det(const LoopMatrix& a) {
  ScalarLoop out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j].determinant();
  return out;
}

ScalarLoop trace(const LoopMatrix& a) {
  ScalarLoop out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j].trace();
  return out;
}

LoopMatrix commutator(const LoopMatrix& a, const LoopMatrix& b) {
  require_compatible(a, b);
  LoopMatrix out(a.grid(), a.dim());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] * b[j] - b[j] * a[j];
  return out;
}

double max_distance(const LoopMatrix& a, const LoopMatrix& b) {
  require_compatible(a, b);
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, (a[j] - b[j]).norm());
  return m;
}

std::vector<MatX> full_spectrum(const LoopMatrix& f) {
  const std::size_t n = f.size();
  const int dim = f.dim();
  std::vector<MatX> spectrum(n, MatX::Zero(dim, dim));
  Eigen::FFT<double> fft;
  std::vector<Complex> in(n), out(n);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      for (std::size_t j = 0; j < n; ++j) in[j] = f[j](r, c);
      fft.fwd(out, in);
      for (std::size_t k = 0; k < n; ++k) {
        // out[k] holds degree k for k < N/2 and degree k - N otherwise.
        const std::size_t slot = (k + n / 2) % n;
        spectrum[slot](r, c) = out[k] / static_cast<double>(n);
      }
    }
  }
  return spectrum;
}

LoopMatrix from_spectrum(const CircleGrid& grid, const std::vector<MatX>& spectrum) {
  const std::size_t n = grid.size();
  if (spectrum.size() != n) throw Error(ErrorKind::InvalidArgument, "spectrum size mismatch");
  const int dim = static_cast<int>(spectrum.front().rows());
  LoopMatrix out(grid, dim);
  Eigen::FFT<double> fft;
  std::vector<Complex> in(n), res(n);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      for (std::size_t slot = 0; slot < n; ++slot) {
        in[(slot + n / 2) % n] = spectrum[slot](r, c) * static_cast<double>(n);
      }
      fft.inv(res, in);
      for (std::size_t j = 0; j < n; ++j) out[j](r, c) = res[j];
    }
  }
  return out;
}

double tail_energy(const LoopMatrix& f, int degree) {
  const auto spectrum = full_spectrum(f);
  const int half = static_cast<int>(f.size() / 2);
  double tail = 0.0;
  for (int d = -half; d < half; ++d) {
    if (std::abs(d) <= degree) continue;
    tail = std::max(tail, spectrum[static_cast<std::size_t>(d + half)].cwiseAbs().maxCoeff());
  }
  return tail;
}

LoopMatrix fourier_analyze(const LoopMatrix& f, int degree) {
  if (degree < 0 || 2 * static_cast<std::size_t>(degree) + 2 > f.size()) {
    throw Error(ErrorKind::DegreeTooLarge,
                "degree " + std::to_string(degree) + " needs N >= 2D+2, N=" + std::to_string(f.size()));
  }
  const auto spectrum = full_spectrum(f);
  const int half = static_cast<int>(f.size() / 2);
  FourierSeries series;
  series.degree = degree;
  for (int d = -degree; d <= degree; ++d) series.coeffs.push_back(spectrum[static_cast<std::size_t>(d + half)]);
  for (int d = -half; d < half; ++d) {
    if (std::abs(d) <= degree) continue;
    series.tail_energy =
        std::max(series.tail_energy, spectrum[static_cast<std::size_t>(d + half)].cwiseAbs().maxCoeff());
  }
  LoopMatrix out = f;
  out.set_fourier(std::move(series));
  return out;
}

namespace {

// Sum over the full spectrum of c_d (i d)^order lambda^d, with the Nyquist
// coefficient split evenly between degrees +-N/2.
MatX spectral_eval(const std::vector<MatX>& spectrum, Complex lambda, int order) {
  const int n = static_cast<int>(spectrum.size());
  const int half = n / 2;
  MatX out = MatX::Zero(spectrum.front().rows(), spectrum.front().cols());
  Complex power = std::pow(lambda, -half);
  for (int d = -half; d <= half; ++d) {
    const MatX& c = spectrum[static_cast<std::size_t>((d == half ? -half : d) + half)];
    const double weight = (std::abs(d) == half) ? 0.5 : 1.0;
    const Complex factor = order == 0 ? Complex(1.0) : std::pow(Complex(0.0, d), order);
    out += (weight * factor * power) * c;
    power *= lambda;
  }
  return out;
}

}  // namespace

MatX evaluate(const LoopMatrix& f, Complex lambda) {
  auto spectrum = full_spectrum(f);
  if (std::abs(std::abs(lambda) - 1.0) > 1e-12) {
    // Off the circle, roundoff-level coefficients are amplified by |lambda|^d.
    double peak = 0.0;
    for (const auto& c : spectrum) peak = std::max(peak, c.cwiseAbs().maxCoeff());
    const double floor = kOffCircleCoefficientFloor * peak;
    for (auto& c : spectrum) {
      if (c.cwiseAbs().maxCoeff() <= floor) c.setZero();
    }
  }
  return spectral_eval(spectrum, lambda, 0);
}

MatX evaluate_theta_derivative(const LoopMatrix& f, Complex lambda, int order) {
  return spectral_eval(full_spectrum(f), lambda, order);
}

LoopMatrix theta_derivative(const LoopMatrix& f) {
  auto spectrum = full_spectrum(f);
  const int half = static_cast<int>(f.size() / 2);
  for (int d = -half; d < half; ++d) {
    auto& c = spectrum[static_cast<std::size_t>(d + half)];
    c = (d == -half) ? MatX(MatX::Zero(c.rows(), c.cols())) : MatX(Complex(0.0, d) * c);
  }
  return from_spectrum(f.grid(), spectrum);
}

void write_loop_csv(const LoopMatrix& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
  out.precision(17);
  out << "j";
  for (int r = 0; r < f.dim(); ++r)
    for (int c = 0; c < f.dim(); ++c) out << ",re_" << r << '_' << c << ",im_" << r << '_' << c;
  out << '\n';
  for (std::size_t j = 0; j < f.size(); ++j) {
    out << j;
    for (int r = 0; r < f.dim(); ++r)
      for (int c = 0; c < f.dim(); ++c) out << ',' << f[j](r, c).real() << ',' << f[j](r, c).imag();
    out << '\n';
  }
}

LoopMatrix read_loop_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(columns) / 2.0)));
  if (dim <= 0 || static_cast<std::size_t>(2 * dim * dim) != columns) {
    throw Error(ErrorKind::Io, "malformed loop CSV header in " + path.string());
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != columns + 1) throw Error(ErrorKind::Io, "malformed loop CSV row in " + path.string());
    rows.push_back(std::move(row));
  }
  LoopMatrix f(CircleGrid(rows.size()), dim);
  for (const auto& row : rows) {
    const auto j = static_cast<std::size_t>(row[0]);
    if (j >= rows.size()) throw Error(ErrorKind::Io, "sample index out of range in " + path.string());
    std::size_t k = 1;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c, k += 2) f[j](r, c) = Complex(row[k], row[k + 1]);
  }
  return f;
}

namespace {

constexpr char kMagic[8] = {'C', 'M', 'C', 'L', 'O', 'O', 'P', '1'};

static_assert(std::endian::native == std::endian::little, "binary loop format assumes little-endian host");

}  // namespace

void write_loop_binary(const LoopMatrix& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
  out.write(kMagic, sizeof kMagic);
  const auto dim = static_cast<std::uint32_t>(f.dim());
  const auto n = static_cast<std::uint32_t>(f.size());
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (std::size_t j = 0; j < f.size(); ++j)
    for (int r = 0; r < f.dim(); ++r)
      for (int c = 0; c < f.dim(); ++c) {
        const double pair[2] = {f[j](r, c).real(), f[j](r, c).imag()};
        out.write(reinterpret_cast<const char*>(pair), sizeof pair);
      }
}

LoopMatrix read_loop_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::Io, "bad magic in " + path.string());
  }
  std::uint32_t dim = 0, n = 0;
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  LoopMatrix f(CircleGrid(n), static_cast<int>(dim));
  for (std::size_t j = 0; j < n; ++j)
    for (int r = 0; r < static_cast<int>(dim); ++r)
      for (int c = 0; c < static_cast<int>(dim); ++c) {
        double pair[2];
        in.read(reinterpret_cast<char*>(pair), sizeof pair);
        f[j](r, c) = Complex(pair[0], pair[1]);
      }
  if (!in) throw Error(ErrorKind::Io, "truncated loop file " + path.string());
  return f;
}

}  // namespace cmcnoid
