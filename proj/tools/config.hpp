#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "cmcnoid/potential.hpp"
#include "cmcnoid/surface.hpp"
#include "cmcnoid/unitarize.hpp"

namespace cmcnoid::cli {

enum class Stage { ChecksOnly, Unitarize, FullSurface };
std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

enum class Variant { Trinoid, Noid, Synthetic };

/// Tolerances a run checks against; every one can be overridden by the
/// environment variable CMCNOID_<NAME in upper case>.
struct Tolerances {
  double ode_tol = 1e-10;
  double closing_tol = 1e-8;             // |M(lambda0^{+-1}) - id|
  double closing_derivative_tol = 1e-5;  // |dM/dlambda| at 1, R3
  double relation_tol = 1e-8;            // |prod M_k - id|
  double residual_tol = 1e-5;            // max |(V M V^{-1})* (V M V^{-1}) - id|
  double fixture_tol = 1e-7;             // synthetic fixture: max |(V C^{-1})* (V C^{-1}) - id|
  double closure_tol = 1e-4;             // surface cut and dihedral residuals, relative to diameter
  double t_tol = 1e-8;
  double imag_tol = 1e-8;
  double herm_tol = 1e-8;
  double chol_tol = 1e-9;
  double iwasawa_tol = 1e-10;
  double identity_tol = 1e-3;
  double goldman_tol = 1e-7;
  double unitarity_tol = 1e-7;           // surface frames
  double alias_tol = 1e-9;

  /// Name to member, in a fixed order.
  std::map<std::string, double Tolerances::*> fields() const;
};

struct RunConfig {
  SpaceForm form;
  Variant variant = Variant::Trinoid;
  Trinoid trinoid;
  SymmetricNoid noid;
  std::uint64_t fixture_seed = 1;
  int fixture_generators = 3;

  std::size_t grid_size = 256;
  int truncation = -1;  // Iwasawa degree D, -1 for N/2 - 1
  std::uint64_t seed = 0;
  Tolerances tol;

  MeshOptions mesh;
  std::size_t surface_grid_size = 64;
  double mean_curvature = 1.0;

  Stage stage = Stage::ChecksOnly;
  std::filesystem::path out = "cmcnoid_out";
  unsigned threads = 0;

  /// Tolerance names taken from the environment.
  std::map<std::string, std::string> env_overrides;

  UnitarizeOptions unitarize_options() const;
  HypothesisOptions hypothesis_options() const;
  SurfaceOptions surface_options() const;
  NoidPotential potential() const;
};

/// Reads an INI file with sections [space], [potential], [numerics], [mesh]
/// and [run]; unknown sections or keys are rejected. Throws
/// Error(InvalidArgument) on any schema violation.
RunConfig load_config(const std::filesystem::path& path);

/// Applies CMCNOID_<TOLERANCE> environment variables. Only tolerance
/// fields are read from the environment.
void apply_environment(RunConfig& cfg);

/// Field and cross-field validation; needs no computation. The radicand
/// and the weight inequalities are left to the admissibility checks.
void validate(const RunConfig& cfg);

}  // namespace cmcnoid::cli
