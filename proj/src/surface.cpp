#include "cmcnoid/surface.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/SVD>

#include "cmcnoid/error.hpp"
#include "cmcnoid/monodromy.hpp"
#include "cmcnoid/parallel.hpp"

namespace cmcnoid {

Complex Chart::z(std::size_t i, std::size_t k) const { return center + radii[i] * std::exp(kI * angles[k]); }

std::vector<Complex> Chart::punctures() const {
  return {center + puncture_radius * std::exp(kI * phi0), center + puncture_radius * std::exp(kI * phi1)};
}

bool Chart::valid(std::size_t i, std::size_t k) const {
  const Complex p = z(i, k);
  for (const Complex q : punctures()) {
    if (std::abs(p - q) < guard) return false;
  }
  return true;
}

namespace {

// Radii clustered logarithmically around the puncture radius: uniform in
// s = sign(r - rp) log(1 + |r - rp| / eps), so rings around the end
// shrink geometrically towards it.
std::vector<double> ring_radii(int count, double rp, double eps, double outer) {
  auto s_of = [&](double r) { return std::copysign(std::log1p(std::abs(r - rp) / eps), r - rp); };
  auto r_of = [&](double s) { return rp + std::copysign(eps * std::expm1(std::abs(s)), s); };
  const double s0 = s_of(0.0), s1 = s_of(outer);
  std::vector<double> r(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) r[static_cast<std::size_t>(i)] = r_of(s0 + (s1 - s0) * i / (count - 1));
  r.front() = 0.0;
  r.back() = outer;
  return r;
}

}  // namespace

DomainGrid make_domain_grid(const NoidPotential& pot, const MeshOptions& opt) {
  if (opt.radial < 3 || opt.angular < 3) throw Error(ErrorKind::InvalidArgument, "mesh needs at least 3x3 samples");
  if (!(opt.end_guard > 0.0 && opt.end_guard < 0.5)) {
    throw Error(ErrorKind::InvalidArgument, "end_guard must lie in (0, 0.5)");
  }
  DomainGrid grid;
  const Complex center = pot.basepoint();
  std::vector<double> boundaries;
  double rp = 1.0, outer = opt.outer_radius;
  if (pot.is_trinoid()) {
    // Punctures 1 and 0 seen from 1/2 at angles 0 and pi.
    boundaries = {0.0, kPi, 2.0 * kPi};
    rp = 0.5;
    if (outer < 0.0) outer = rp / opt.end_guard;
  } else {
    const int n = pot.noid().n;
    for (int k = 0; k <= n; ++k) boundaries.push_back(2.0 * kPi * k / n);
    if (outer < 0.0) outer = 100.0;
  }
  if (outer <= rp * (1.0 + 2.0 * opt.end_guard)) throw Error(ErrorKind::InvalidArgument, "outer radius too small");
  const double eps = opt.end_guard * rp;
  const auto radii = ring_radii(opt.radial, rp, eps, outer);
  for (std::size_t c = 0; c + 1 < boundaries.size(); ++c) {
    Chart ch;
    ch.id = static_cast<int>(c);
    ch.center = center;
    ch.phi0 = boundaries[c];
    ch.phi1 = boundaries[c + 1];
    ch.radii = radii;
    ch.puncture_radius = rp;
    ch.guard = eps;
    for (int k = 0; k < opt.angular; ++k) ch.angles.push_back(ch.phi0 + (ch.phi1 - ch.phi0) * k / (opt.angular - 1));
    if (std::abs(center + rp * std::exp(kI * ch.phi0) - center) < 2.0 * pot.pole_guard()) {
      throw Error(ErrorKind::InvalidArgument, "end guard below the pole guard");
    }
    grid.charts.push_back(std::move(ch));
  }
  if (eps / 2.0 <= pot.pole_guard()) throw Error(ErrorKind::InvalidArgument, "end guard below the pole guard");
  return grid;
}

LoopMatrix resample(const LoopMatrix& f, const CircleGrid& grid) {
  if (f.grid() == grid) return f;
  LoopMatrix out(grid, f.dim());
  const auto spec = full_spectrum(f);
  const int half = static_cast<int>(f.size() / 2);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Complex l = grid.point(j);
    MatX acc = MatX::Zero(f.dim(), f.dim());
    for (int d = -half; d < half; ++d) {
      const double w = (d == -half) ? 0.5 : 1.0;  // Nyquist term split between +-N/2
      acc += w * spec[static_cast<std::size_t>(d + half)] * std::pow(l, d);
      if (d == -half) acc += w * spec[static_cast<std::size_t>(d + half)] * std::pow(l, -d);
    }
    out[j] = acc;
  }
  return out;
}

namespace {

double unitarity_at(const MatX& f) { return (f.adjoint() * f - MatX::Identity(f.rows(), f.cols())).norm(); }

Vec3 pauli_coordinates(const MatX& m) {
  Vec3 x;
  for (int k = 1; k <= 3; ++k) x(k - 1) = (-kI * (m * pauli(k)).trace()).real();
  return x;
}

}  // namespace

SymPoint sym_bobenko_r3(const LoopMatrix& F, double mean_curvature, double unitarity_tol) {
  const MatX f1 = F[0];
  if (unitarity_at(f1) > unitarity_tol) throw Error(ErrorKind::NonUnitaryFrame, "frame not unitary at lambda = 1");
  const MatX ft = evaluate_theta_derivative(F, 1.0, 1);
  SymPoint p;
  p.raw = -(2.0 / mean_curvature) * ft * f1.adjoint();
  p.x = pauli_coordinates(p.raw);
  return p;
}

SymPoint sym_bobenko_s3(const LoopMatrix& F, Complex lambda0, double unitarity_tol) {
  const MatX a = evaluate(F, lambda0), b = evaluate(F, 1.0 / lambda0);
  if (unitarity_at(a) > unitarity_tol || unitarity_at(b) > unitarity_tol) {
    throw Error(ErrorKind::NonUnitaryFrame, "frame not unitary at the Sym points");
  }
  SymPoint p;
  p.raw = b * a.adjoint();
  const double x0 = p.raw(0, 0).real(), x1 = p.raw(0, 0).imag(), x2 = p.raw(0, 1).real(), x3 = p.raw(0, 1).imag();
  p.x = Vec3(x1, x2, x3) / (1.0 + x0);
  return p;
}

SymPoint sym_bobenko_h3(const Mat2& f_at_s) {
  SymPoint p;
  p.raw = MatX(f_at_s * f_at_s.adjoint());
  const double x0 = 0.5 * p.raw.trace().real();
  Vec3 x;
  for (int k = 1; k <= 3; ++k) x(k - 1) = 0.5 * (p.raw * pauli(k)).trace().real();
  p.x = x / (1.0 + x0);
  return p;
}

int ImmersionMesh::vertex(int chart, int i, int k) const {
  return index[static_cast<std::size_t>(chart)][static_cast<std::size_t>(i * angular + k)];
}

double ImmersionMesh::diameter() const {
  if (vertices.empty()) return 0.0;
  Vec3 lo = vertices.front().x, hi = lo;
  for (const auto& v : vertices) {
    lo = lo.cwiseMin(v.x);
    hi = hi.cwiseMax(v.x);
  }
  return (hi - lo).norm();
}

namespace {

// Path from radius ra to rb along the ray at angle phi; on a boundary ray
// the puncture at rp is passed on a half circle of radius delta on the
// sector side (side = +1 counterclockwise of the ray, -1 clockwise).
Path ray_path(Complex center, double phi, double ra, double rb, double rp, double delta, int side) {
  const Complex u = std::exp(kI * phi);
  Path p;
  if (side == 0 || !(ra < rp && rb > rp)) {
    p.append(PathSegment::line(center + ra * u, center + rb * u));
    return p;
  }
  const Complex puncture = center + rp * u;
  p.append(PathSegment::line(center + ra * u, center + (rp - delta) * u));
  if (side > 0) {
    p.append(PathSegment::arc(puncture, delta, phi + kPi, phi));
  } else {
    p.append(PathSegment::arc(puncture, delta, phi + kPi, phi + 2.0 * kPi));
  }
  p.append(PathSegment::line(center + (rp + delta) * u, center + rb * u));
  return p;
}

struct ColumnResult {
  std::vector<std::optional<SymPoint>> points;
  std::vector<double> unitarity;
  std::size_t grid_size = 0;
};

// Largest coefficient norm with |degree| > 3N/8, relative to the largest overall.
double spectral_tail(const LoopMatrix& f) {
  const std::vector<MatX> spec = full_spectrum(f);
  const long n = static_cast<long>(spec.size());
  double top = 0.0, tail = 0.0;
  for (long idx = 0; idx < n; ++idx) {
    const double c = spec[static_cast<std::size_t>(idx)].norm();
    top = std::max(top, c);
    if (8 * std::abs(idx - n / 2) > 3 * n) tail = std::max(tail, c);
  }
  return top > 0.0 ? tail / top : 0.0;
}

}  // namespace

ImmersionMesh build_surface(const NoidPotential& pot, const LoopMatrix& c_plus, const SurfaceOptions& opt) {
  const DomainGrid domain = make_domain_grid(pot, opt.mesh);
  // Columns whose Psi is not resolved on grid_size are redone on doubled grids.
  std::vector<CircleGrid> grids;
  std::vector<LoopMatrix> cps;
  for (std::size_t n = opt.grid_size; n <= std::max(opt.grid_size, opt.max_grid_size); n *= 2) {
    grids.emplace_back(n);
    cps.push_back(resample(c_plus, grids.back()));
  }
  const SpaceForm& form = pot.form();
  const bool h3 = form.kind == SpaceFormKind::H3;
  const bool noid = !pot.is_trinoid();
  const MatX cp_inside = h3 ? eval_inside(cps.front(), form.lambda0) : MatX();
  const XiFunction xi = [&pot](Complex z, Complex l) { return pot.xi_at(z, l); };
  OdeOptions ode;
  ode.tol = opt.ode_tol;
  const double mean_curvature = form.kind == SpaceFormKind::R3 ? opt.mean_curvature : form.mean_curvature();

  const std::size_t nr = static_cast<std::size_t>(opt.mesh.radial);
  const std::size_t na = static_cast<std::size_t>(opt.mesh.angular);
  const std::size_t charts = domain.charts.size();
  std::vector<ColumnResult> columns(charts * na);

  parallel_for(charts * na, [&](std::size_t job) {
    const Chart& ch = domain.charts[job / na];
    const std::size_t k = job % na;
    const int side = k == 0 ? 1 : (k + 1 == na ? -1 : 0);
    const double phi = ch.angles[k];
    const double delta = 0.5 * ch.guard;

    // Phi along the column for one lambda; nodes within the guard are skipped.
    auto sweep = [&](Complex lambda) {
      std::vector<std::optional<Mat2>> phi_at(nr);
      Mat2 current = Mat2::Identity();
      double r_current = 0.0;
      phi_at[0] = current;
      for (std::size_t i = 1; i < nr; ++i) {
        if (!ch.valid(i, k)) continue;
        const Path path = ray_path(ch.center, phi, r_current, ch.radii[i], ch.puncture_radius, delta, side);
        current = integrate_path(xi, path, lambda, ode, current);
        r_current = ch.radii[i];
        phi_at[i] = current;
      }
      return phi_at;
    };

    // Right factors by a positive loop leave F unchanged up to a constant
    // unitary diagonal, which every Sym-Bobenko formula ignores. Past |z| = 1
    // the n-noid frame is taken in the gauge holomorphic at infinity, whose
    // Phi stays bounded, so the Iwasawa input stays well conditioned.
    auto right_gauge = [&](std::size_t i, Complex lambda) -> Mat2 {
      const Complex z = ch.z(i, k);
      if (noid && std::abs(z) > 1.0) return infinity_gauge(z, lambda);
      return Mat2::Identity();
    };

    std::vector<std::optional<Mat2>> interior;
    if (h3) {
      interior = sweep(form.lambda0);
      for (std::size_t i = 0; i < nr; ++i) {
        if (interior[i]) *interior[i] = *interior[i] * right_gauge(i, form.lambda0);
      }
    }

    auto factor_column = [&](const std::vector<LoopMatrix>& psi) {
      ColumnResult out;
      out.points.resize(nr);
      out.unitarity.assign(nr, 0.0);
      for (std::size_t i = 0; i < nr; ++i) {
        if (!ch.valid(i, k)) continue;
        const IwasawaFactors fac = iwasawa(psi[i], opt.iwasawa);
        out.unitarity[i] = fac.unitarity;
        switch (form.kind) {
          case SpaceFormKind::R3:
            out.points[i] = sym_bobenko_r3(fac.F, mean_curvature, opt.unitarity_tol);
            break;
          case SpaceFormKind::S3:
            out.points[i] = sym_bobenko_s3(fac.F, form.lambda0, opt.unitarity_tol);
            break;
          case SpaceFormKind::H3: {
            const Mat2 f = cp_inside * (*interior[i]) * eval_inside(fac.B, form.lambda0).inverse();
            out.points[i] = sym_bobenko_h3(f);
            break;
          }
        }
      }
      return out;
    };

    // Psi on the grid of level l; false when its spectrum is not resolved.
    auto frames = [&](std::size_t l, std::vector<LoopMatrix>& psi) {
      const CircleGrid& grid = grids[l];
      psi.assign(nr, LoopMatrix(grid, 2));
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const Complex lambda = grid.point(j);
        const auto values = sweep(lambda);
        const MatX c = cps[l][j];
        for (std::size_t i = 0; i < nr; ++i) {
          if (values[i]) psi[i][j] = c * (*values[i]) * right_gauge(i, lambda);
        }
      }
      for (std::size_t i = 0; i < nr; ++i) {
        if (ch.valid(i, k) && spectral_tail(psi[i]) > opt.alias_tol) return false;
      }
      return true;
    };

    ColumnResult& out = columns[job];
    for (std::size_t l = 0;; ++l) {
      const bool last = l + 1 == grids.size();
      std::vector<LoopMatrix> psi;
      if (!frames(l, psi) && !last) continue;
      try {
        out = factor_column(psi);
        out.grid_size = grids[l].size();
        break;
      } catch (const Error& e) {
        if (last || e.kind() != ErrorKind::NoConvergence) throw;
      }
    }
  });

  ImmersionMesh mesh;
  mesh.kind = form.kind;
  mesh.mean_curvature = mean_curvature;
  mesh.chart_count = static_cast<int>(charts);
  mesh.angular = static_cast<int>(na);
  mesh.radial = static_cast<int>(nr);
  mesh.cyclic = domain.cyclic;
  mesh.symmetry_order = pot.is_trinoid() ? 0 : pot.noid().n;
  mesh.index.assign(charts, std::vector<int>(nr * na, -1));
  for (std::size_t c = 0; c < charts; ++c) {
    const Chart& ch = domain.charts[c];
    for (std::size_t i = 0; i < nr; ++i) {
      for (std::size_t k = 0; k < na; ++k) {
        if (i == 0 && k > 0) {
          mesh.index[c][k] = mesh.index[c][0];  // the center is one vertex per chart
          continue;
        }
        const ColumnResult& col = columns[c * na + k];
        if (!col.points[i]) continue;
        ImmersionMesh::Vertex v;
        v.x = col.points[i]->x;
        v.z = ch.z(i, k);
        v.chart = static_cast<int>(c);
        v.i = static_cast<int>(i);
        v.k = static_cast<int>(k);
        v.unitarity = col.unitarity[i];
        v.grid_size = static_cast<int>(col.grid_size);
        if (!v.x.allFinite()) throw Error(ErrorKind::NonUnitaryFrame, "non-finite surface point");
        mesh.index[c][i * na + k] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(v);
      }
    }
    for (std::size_t i = 0; i + 1 < nr; ++i) {
      for (std::size_t k = 0; k + 1 < na; ++k) {
        const int quad[4] = {mesh.index[c][i * na + k], mesh.index[c][(i + 1) * na + k],
                             mesh.index[c][(i + 1) * na + k + 1], mesh.index[c][i * na + k + 1]};
        if (std::any_of(quad, quad + 4, [](int q) { return q < 0; })) continue;
        std::vector<int> face;
        for (int q : quad) {
          if (face.empty() || (face.back() != q && face.front() != q)) face.push_back(q);
        }
        if (face.size() < 3) continue;
        mesh.faces.push_back(std::move(face));
        mesh.face_chart.push_back(static_cast<int>(c));
      }
    }
  }
  return mesh;
}

namespace {

// Least-squares rigid motion y ~ R x + t (Kabsch).
std::pair<Eigen::Matrix3d, Vec3> kabsch(const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
  Vec3 cx = Vec3::Zero(), cy = Vec3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    cx += x[i];
    cy += y[i];
  }
  cx /= static_cast<double>(x.size());
  cy /= static_cast<double>(y.size());
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) h += (x[i] - cx) * (y[i] - cy).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
  return {r, cy - r * cx};
}

}  // namespace

ClosureReport closing_residual(ImmersionMesh& mesh) {
  ClosureReport rep;
  rep.diameter = mesh.diameter();
  const double diam = rep.diameter > 0.0 ? rep.diameter : 1.0;
  for (const auto& v : mesh.vertices) {
    rep.max_unitarity = std::max(rep.max_unitarity, v.unitarity);
    rep.max_ball_radius = std::max(rep.max_ball_radius, v.x.norm());
  }
  if (mesh.kind != SpaceFormKind::H3) rep.max_ball_radius = 0.0;

  // Shared rays: last column of chart c against the first column of chart c + 1.
  const int charts = mesh.chart_count;
  double worst = 0.0;
  for (int c = 0; c < charts; ++c) {
    if (!mesh.cyclic && c + 1 == charts) break;
    const int next = (c + 1) % charts;
    for (int i = 1; i < mesh.radial; ++i) {
      const int a = mesh.vertex(c, i, mesh.angular - 1), b = mesh.vertex(next, i, 0);
      if (a < 0 || b < 0) continue;
      auto& va = mesh.vertices[static_cast<std::size_t>(a)];
      auto& vb = mesh.vertices[static_cast<std::size_t>(b)];
      const double d = (va.x - vb.x).norm();
      va.closure = std::max(va.closure, d);
      vb.closure = std::max(vb.closure, d);
      worst = std::max(worst, d);
      ++rep.cut_pairs;
    }
  }
  rep.cut_residual = worst / diam;

  if (mesh.symmetry_order > 0 && charts > 1) {
    // Rigid motion taking chart 0 to chart 1, then checked on every pair.
    std::vector<Vec3> xs, ys;
    for (int i = 0; i < mesh.radial; ++i) {
      for (int k = 0; k < mesh.angular; ++k) {
        const int a = mesh.vertex(0, i, k), b = mesh.vertex(1, i, k);
        if (a < 0 || b < 0) continue;
        xs.push_back(mesh.vertices[static_cast<std::size_t>(a)].x);
        ys.push_back(mesh.vertices[static_cast<std::size_t>(b)].x);
      }
    }
    const auto [r, t] = kabsch(xs, ys);
    rep.rotation_angle = std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
    double sym = 0.0;
    for (int c = 0; c < charts; ++c) {
      const int next = (c + 1) % charts;
      for (int i = 0; i < mesh.radial; ++i) {
        for (int k = 0; k < mesh.angular; ++k) {
          const int a = mesh.vertex(c, i, k), b = mesh.vertex(next, i, k);
          if (a < 0 || b < 0) continue;
          sym = std::max(sym, (r * mesh.vertices[static_cast<std::size_t>(a)].x + t -
                               mesh.vertices[static_cast<std::size_t>(b)].x)
                                  .norm());
        }
      }
    }
    rep.dihedral_residual = sym / diam;

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
    bool any = false;
    for (const auto& v : mesh.vertices) {
      const double az = std::abs(v.z);
      if (az < 10.0 || az > 100.0) continue;
      lo = lo.cwiseMin(v.x);
      hi = hi.cwiseMax(v.x);
      any = true;
    }
    if (any) rep.infinity_spread = (hi - lo).norm() / diam;
  }
  return rep;
}

void export_obj(const ImmersionMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
  out.precision(12);
  out << "# CMC immersion, " << to_string(mesh.kind) << ", H = " << mesh.mean_curvature << '\n';
  // Vertices are global; each chart's faces form one object.
  for (const auto& v : mesh.vertices) out << "v " << v.x(0) << ' ' << v.x(1) << ' ' << v.x(2) << '\n';
  for (int c = 0; c < mesh.chart_count; ++c) {
    out << "o chart_" << c << '\n';
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      if (mesh.face_chart[f] != c) continue;
      out << 'f';
      for (int idx : mesh.faces[f]) out << ' ' << idx + 1;
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void export_diagnostics_csv(const ImmersionMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
  out.precision(12);
  out << "vertex,chart,i,k,z_re,z_im,x,y,z,unitarity,closure,grid_size\n";
  for (std::size_t n = 0; n < mesh.vertices.size(); ++n) {
    const auto& v = mesh.vertices[n];
    out << n << ',' << v.chart << ',' << v.i << ',' << v.k << ',' << v.z.real() << ',' << v.z.imag() << ','
        << v.x(0) << ',' << v.x(1) << ',' << v.x(2) << ',' << v.unitarity << ',' << v.closure << ',' << v.grid_size << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace cmcnoid
