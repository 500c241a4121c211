#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "cmcnoid/iwasawa.hpp"
#include "cmcnoid/loop.hpp"
#include "cmcnoid/potential.hpp"

namespace cmcnoid {

struct MeshOptions {
  int radial = 64;            // samples along each ray, center included
  int angular = 64;           // samples across each sector, both boundary rays included
  double end_guard = 0.02;    // excluded disk around each end, relative to its distance from the center
  double outer_radius = -1.0; // -1: 100 for symmetric n-noids (infinity is smooth), r_p / end_guard for trinoids
};

/// Polar sector {center + r e^{i phi}: phi in [phi0, phi1], r in radii}
/// with one puncture on each boundary ray at distance puncture_radius.
/// Paths from the center run along the ray; on a boundary ray they pass the
/// puncture on a half circle inside the sector, so the two sectors sharing
/// a ray see the sheets on either side of the cut behind the puncture.
struct Chart {
  int id = 0;
  Complex center{};
  double phi0 = 0.0, phi1 = 0.0;
  std::vector<double> radii;
  std::vector<double> angles;
  double puncture_radius = 1.0;
  double guard = 0.0;  // absolute excluded radius around each puncture

  Complex z(std::size_t i, std::size_t k) const;  // i radial, k angular
  bool valid(std::size_t i, std::size_t k) const;
  std::vector<Complex> punctures() const;  // the two on the boundary rays
};

struct DomainGrid {
  std::vector<Chart> charts;
  /// Chart c's phi1 ray coincides with chart (c + 1) % size's phi0 ray.
  bool cyclic = true;
};

DomainGrid make_domain_grid(const NoidPotential& pot, const MeshOptions& opt = {});

struct SymPoint {
  Vec3 x = Vec3::Zero();
  MatX raw;  // f in su(2), G in SU(2), or F F^H Hermitian
};

/// R3: f = -(2/H) F_theta F^{-1} at lambda = 1 with f = (1/2) sum_k x_k i sigma_k,
/// so x_k = -i tr(f sigma_k).
SymPoint sym_bobenko_r3(const LoopMatrix& F, double mean_curvature, double unitarity_tol = 1e-7);
/// S3: G = F(1/lambda0) F(lambda0)^{-1} = [[a, b], [-conj b, conj a]] maps to
/// (Re a, Im a, Re b, Im b) in R^4, then stereographic projection from (-1, 0, 0, 0).
SymPoint sym_bobenko_s3(const LoopMatrix& F, Complex lambda0, double unitarity_tol = 1e-7);
/// H3: P = F(s) F(s)^H = x0 id + sum_k x_k sigma_k, then the Poincare ball x / (1 + x0).
SymPoint sym_bobenko_h3(const Mat2& f_at_s);

struct SurfaceOptions {
  MeshOptions mesh;
  std::size_t grid_size = 64;       // lambda samples for the frame loops
  std::size_t max_grid_size = 512;  // columns are refined by doubling up to this
  double alias_tol = 1e-9;          // relative spectral tail of Psi accepted without refinement
  double ode_tol = 1e-10;
  double mean_curvature = 1.0;  // R3 only; S3 and H3 use the value implied by lambda0
  double unitarity_tol = 1e-7;
  IwasawaOptions iwasawa;
};

struct ImmersionMesh {
  struct Vertex {
    Vec3 x = Vec3::Zero();
    Complex z{};
    int chart = 0;
    int i = 0, k = 0;          // radial and angular index in the chart
    double unitarity = 0.0;    // max |F* F - id| over lambda
    double closure = -1.0;     // distance to the partner on a shared ray, -1 elsewhere
    int grid_size = 0;         // lambda samples used for this vertex's column
  };
  std::vector<Vertex> vertices;
  std::vector<std::vector<int>> faces;  // counterclockwise in (r, phi)
  std::vector<int> face_chart;
  SpaceFormKind kind = SpaceFormKind::R3;
  double mean_curvature = 1.0;
  int chart_count = 0;
  /// Vertex index of (chart, i, k), or -1 when excluded.
  std::vector<std::vector<int>> index;  // per chart, i * angular + k
  int angular = 0;
  int radial = 0;
  bool cyclic = true;
  int symmetry_order = 0;  // n for symmetric n-noids, 0 otherwise

  int vertex(int chart, int i, int k) const;
  double diameter() const;  // bounding-box diagonal
};

/// Psi(z) = C_+ Phi(z) with Phi(center) = id on every chart, Iwasawa factored
/// per vertex, mapped by the Sym-Bobenko formula of the potential's space
/// form. c_plus may live on any grid; it is resampled to grid_size.
ImmersionMesh build_surface(const NoidPotential& pot, const LoopMatrix& c_plus, const SurfaceOptions& opt = {});

struct ClosureReport {
  double diameter = 0.0;
  double cut_residual = 0.0;        // max distance between images of a shared-ray z, relative to diameter
  std::size_t cut_pairs = 0;
  std::optional<double> dihedral_residual;  // relative, symmetric n-noids
  std::optional<double> rotation_angle;     // of the rigid motion chart k -> k + 1
  std::optional<double> infinity_spread;    // relative spread of vertices with |z| in [10, 100]
  double max_unitarity = 0.0;
  double max_ball_radius = 0.0;  // H3 only
};

/// Closure across cuts; for symmetric n-noids also the rigid motion mapping
/// chart k onto chart k + 1 (Kabsch fit, applied to every chart pair) and the
/// spread of the image near z = infinity. Fills Vertex::closure.
ClosureReport closing_residual(ImmersionMesh& mesh);

/// Wavefront OBJ, one object per chart.
void export_obj(const ImmersionMesh& mesh, const std::filesystem::path& path);
/// Per-vertex diagnostics CSV.
void export_diagnostics_csv(const ImmersionMesh& mesh, const std::filesystem::path& path);

/// Samples of f at the points of another grid, by Fourier evaluation.
LoopMatrix resample(const LoopMatrix& f, const CircleGrid& grid);

}  // namespace cmcnoid
