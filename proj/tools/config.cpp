#include "config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cmcnoid/error.hpp"

namespace cmcnoid::cli {

namespace pt = boost::property_tree;

std::string to_string(Stage s) {
  switch (s) {
    case Stage::ChecksOnly: return "checks-only";
    case Stage::Unitarize: return "unitarize";
    case Stage::FullSurface: return "full-surface";
  }
  return "?";
}

Stage stage_from_string(const std::string& s) {
  if (s == "checks-only") return Stage::ChecksOnly;
  if (s == "unitarize") return Stage::Unitarize;
  if (s == "full-surface") return Stage::FullSurface;
  throw Error(ErrorKind::InvalidArgument, "unknown stage '" + s + "'");
}

std::map<std::string, double Tolerances::*> Tolerances::fields() const {
  return {
      {"ode_tol", &Tolerances::ode_tol},
      {"closing_tol", &Tolerances::closing_tol},
      {"closing_derivative_tol", &Tolerances::closing_derivative_tol},
      {"relation_tol", &Tolerances::relation_tol},
      {"residual_tol", &Tolerances::residual_tol},
      {"fixture_tol", &Tolerances::fixture_tol},
      {"closure_tol", &Tolerances::closure_tol},
      {"t_tol", &Tolerances::t_tol},
      {"imag_tol", &Tolerances::imag_tol},
      {"herm_tol", &Tolerances::herm_tol},
      {"chol_tol", &Tolerances::chol_tol},
      {"iwasawa_tol", &Tolerances::iwasawa_tol},
      {"identity_tol", &Tolerances::identity_tol},
      {"goldman_tol", &Tolerances::goldman_tol},
      {"unitarity_tol", &Tolerances::unitarity_tol},
      {"alias_tol", &Tolerances::alias_tol},
  };
}

UnitarizeOptions RunConfig::unitarize_options() const {
  UnitarizeOptions o;
  o.t_tol = tol.t_tol;
  o.imag_tol = tol.imag_tol;
  o.herm_tol = tol.herm_tol;
  o.chol_tol = tol.chol_tol;
  o.seed = seed;
  o.iwasawa.tol = tol.iwasawa_tol;
  o.iwasawa.degree = truncation;
  return o;
}

HypothesisOptions RunConfig::hypothesis_options() const {
  HypothesisOptions o;
  o.identity_tol = tol.identity_tol;
  o.goldman_tol = tol.goldman_tol;
  return o;
}

SurfaceOptions RunConfig::surface_options() const {
  SurfaceOptions o;
  o.mesh = mesh;
  o.grid_size = surface_grid_size;
  o.ode_tol = tol.ode_tol;
  o.mean_curvature = mean_curvature;
  o.unitarity_tol = tol.unitarity_tol;
  o.alias_tol = tol.alias_tol;
  o.iwasawa.tol = tol.iwasawa_tol;
  return o;
}

NoidPotential RunConfig::potential() const {
  if (variant == Variant::Trinoid) return NoidPotential(form, trinoid);
  if (variant == Variant::Noid) return NoidPotential(form, noid);
  throw Error(ErrorKind::InvalidArgument, "the synthetic variant has no potential");
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = [] {
    std::map<std::string, std::set<std::string>> m = {
        {"space", {"form", "lambda0_angle", "s"}},
        {"potential", {"variant", "weights", "n", "w", "fixture_seed", "fixture_generators"}},
        {"numerics", {"grid_size", "truncation", "seed"}},
        {"mesh", {"radial", "angular", "end_guard", "outer_radius", "grid_size", "mean_curvature"}},
        {"run", {"stage", "out", "threads"}},
    };
    for (const auto& [name, member] : Tolerances{}.fields()) m["numerics"].insert(name);
    return m;
  }();
  return s;
}

template <class T>
T parse_value(const std::string& section, const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw Error(ErrorKind::InvalidArgument, "[" + section + "] " + key + ": cannot parse '" + text + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> out;
  for (std::string item; std::getline(in, item, ',');) {
    std::istringstream words(item);
    for (double v; words >> v;) out.push_back(v);
    if (!words.eof()) throw Error(ErrorKind::InvalidArgument, "[potential] weights: cannot parse '" + text + "'");
  }
  return out;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw Error(ErrorKind::InvalidArgument, "config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorKind::InvalidArgument, "config: key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw Error(ErrorKind::InvalidArgument, "config: unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    const auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
    if (!v) return std::nullopt;
    return *v;
  };

  RunConfig cfg;
  const std::string form = get("space", "form").value_or("R3");
  switch (space_form_from_string(form)) {
    case SpaceFormKind::R3:
      cfg.form = SpaceForm::r3();
      break;
    case SpaceFormKind::S3: {
      const auto angle = get("space", "lambda0_angle");
      if (!angle) throw Error(ErrorKind::InvalidArgument, "[space] S3 needs lambda0_angle");
      cfg.form = SpaceForm::s3(std::polar(1.0, parse_value<double>("space", "lambda0_angle", *angle)));
      break;
    }
    case SpaceFormKind::H3: {
      const auto s = get("space", "s");
      if (!s) throw Error(ErrorKind::InvalidArgument, "[space] H3 needs s");
      cfg.form = SpaceForm::h3(parse_value<double>("space", "s", *s));
      break;
    }
  }

  const std::string variant = get("potential", "variant").value_or("trinoid");
  if (variant == "trinoid") {
    cfg.variant = Variant::Trinoid;
    const auto w = parse_list(get("potential", "weights").value_or(""));
    if (w.size() != 3) throw Error(ErrorKind::InvalidArgument, "[potential] trinoid needs three weights");
    cfg.trinoid = Trinoid{w[0], w[1], w[2]};
  } else if (variant == "noid") {
    cfg.variant = Variant::Noid;
    const auto n = get("potential", "n");
    const auto w = get("potential", "w");
    if (!n || !w) throw Error(ErrorKind::InvalidArgument, "[potential] noid needs n and w");
    cfg.noid = SymmetricNoid{parse_value<int>("potential", "n", *n), parse_value<double>("potential", "w", *w)};
  } else if (variant == "synthetic") {
    cfg.variant = Variant::Synthetic;
  } else {
    throw Error(ErrorKind::InvalidArgument, "[potential] unknown variant '" + variant + "'");
  }
  if (auto v = get("potential", "fixture_seed")) cfg.fixture_seed = parse_value<std::uint64_t>("potential", "fixture_seed", *v);
  if (auto v = get("potential", "fixture_generators")) {
    cfg.fixture_generators = parse_value<int>("potential", "fixture_generators", *v);
  }

  if (auto v = get("numerics", "grid_size")) cfg.grid_size = parse_value<std::size_t>("numerics", "grid_size", *v);
  if (auto v = get("numerics", "truncation")) cfg.truncation = parse_value<int>("numerics", "truncation", *v);
  if (auto v = get("numerics", "seed")) cfg.seed = parse_value<std::uint64_t>("numerics", "seed", *v);
  for (const auto& [name, member] : cfg.tol.fields()) {
    if (auto v = get("numerics", name)) cfg.tol.*member = parse_value<double>("numerics", name, *v);
  }

  if (auto v = get("mesh", "radial")) cfg.mesh.radial = parse_value<int>("mesh", "radial", *v);
  if (auto v = get("mesh", "angular")) cfg.mesh.angular = parse_value<int>("mesh", "angular", *v);
  if (auto v = get("mesh", "end_guard")) cfg.mesh.end_guard = parse_value<double>("mesh", "end_guard", *v);
  if (auto v = get("mesh", "outer_radius")) cfg.mesh.outer_radius = parse_value<double>("mesh", "outer_radius", *v);
  if (auto v = get("mesh", "grid_size")) cfg.surface_grid_size = parse_value<std::size_t>("mesh", "grid_size", *v);
  if (auto v = get("mesh", "mean_curvature")) cfg.mean_curvature = parse_value<double>("mesh", "mean_curvature", *v);

  if (auto v = get("run", "stage")) cfg.stage = stage_from_string(*v);
  if (auto v = get("run", "out")) cfg.out = *v;
  if (auto v = get("run", "threads")) cfg.threads = parse_value<unsigned>("run", "threads", *v);
  return cfg;
}

void apply_environment(RunConfig& cfg) {
  for (const auto& [name, member] : cfg.tol.fields()) {
    std::string var = "CMCNOID_" + name;
    for (char& c : var) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const char* text = std::getenv(var.c_str());
    if (!text) continue;
    cfg.tol.*member = parse_value<double>("environment", var, text);
    cfg.env_overrides[name] = text;
  }
}

void validate(const RunConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, what);
  };
  require(cfg.grid_size >= 8 && (cfg.grid_size & (cfg.grid_size - 1)) == 0, "grid_size must be a power of two >= 8");
  require(cfg.surface_grid_size >= 8 && (cfg.surface_grid_size & (cfg.surface_grid_size - 1)) == 0,
          "[mesh] grid_size must be a power of two >= 8");
  require(cfg.truncation == -1 || (cfg.truncation >= 1 && static_cast<std::size_t>(cfg.truncation) < cfg.grid_size / 2),
          "truncation must be -1 or in [1, N/2)");
  for (const auto& [name, member] : cfg.tol.fields()) {
    const double v = cfg.tol.*member;
    require(std::isfinite(v) && v > 0.0, "tolerance " + name + " must be positive");
  }
  require(cfg.mean_curvature > 0.0, "[mesh] mean_curvature must be positive");
  if (cfg.variant == Variant::Synthetic) {
    require(cfg.stage != Stage::FullSurface, "the synthetic variant has no surface");
    require(cfg.fixture_generators >= 2, "fixture_generators must be at least 2");
    return;
  }
  // Weights against the radicand are an admissibility check of the run, not a usage error.
  if (cfg.variant == Variant::Trinoid) {
    for (double w : {cfg.trinoid.w0, cfg.trinoid.w1, cfg.trinoid.winf}) require(std::isfinite(w) && w != 0.0, "weights must be finite and nonzero");
  } else {
    require(cfg.noid.n >= 3, "n must be at least 3");
    require(std::isfinite(cfg.noid.w) && cfg.noid.w != 0.0, "w must be finite and nonzero");
  }
  require(cfg.mesh.radial >= 3 && cfg.mesh.angular >= 3, "[mesh] needs at least 3x3 samples");
  require(cfg.mesh.end_guard > 0.0 && cfg.mesh.end_guard < 0.5, "[mesh] end_guard must lie in (0, 0.5)");
}

}  // namespace cmcnoid::cli
