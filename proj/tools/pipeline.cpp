#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "cmcnoid/error.hpp"
#include "cmcnoid/monodromy.hpp"
#include "cmcnoid/parallel.hpp"
#include "cmcnoid/surface.hpp"
#include "cmcnoid/unitarize.hpp"
#include "json.hpp"

namespace cmcnoid::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Fixed formatting so identical runs give byte-identical files.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

ordered_json complex_json(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return out;
}

void write_json(const fs::path& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

ordered_json check_json(const CheckResult& c) {
  ordered_json j;
  j["stage"] = c.stage;
  j["check"] = c.name;
  j["value"] = c.value;
  j["threshold"] = c.threshold;
  j["holds"] = c.holds;
  j["sample"] = c.sample ? ordered_json(*c.sample) : ordered_json(nullptr);
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Trinoid: return "trinoid";
    case Variant::Noid: return "noid";
    case Variant::Synthetic: return "synthetic";
  }
  return "?";
}

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j;
  j["form"] = to_string(cfg.form.kind);
  j["lambda0"] = complex_json(cfg.form.lambda0);
  j["variant"] = variant_name(cfg.variant);
  if (cfg.variant == Variant::Trinoid) j["weights"] = {cfg.trinoid.w0, cfg.trinoid.w1, cfg.trinoid.winf};
  if (cfg.variant == Variant::Noid) {
    j["n"] = cfg.noid.n;
    j["w"] = cfg.noid.w;
  }
  if (cfg.variant == Variant::Synthetic) {
    j["fixture_seed"] = cfg.fixture_seed;
    j["fixture_generators"] = cfg.fixture_generators;
  }
  j["grid_size"] = cfg.grid_size;
  j["truncation"] = cfg.truncation;
  j["seed"] = cfg.seed;
  ordered_json tol;
  for (const auto& [name, member] : cfg.tol.fields()) tol[name] = cfg.tol.*member;
  j["tolerances"] = tol;
  j["environment_overrides"] = cfg.env_overrides;
  j["stage"] = to_string(cfg.stage);
  return j;
}

// max_j f(j) with its argmax.
template <class Fn>
std::pair<double, std::size_t> max_over(std::size_t count, Fn&& f) {
  double best = -1.0;
  std::size_t at = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const double v = f(j);
    if (v > best) {
      best = v;
      at = j;
    }
  }
  return {best, at};
}

class Runner {
 public:
  explicit Runner(const RunConfig& cfg) : cfg_(cfg) {}

  RunOutcome run() {
    fs::create_directories(cfg_.out);
    fs::remove(cfg_.out / "failure.json");
    std::string stage = "setup";
    try {
      stage = "checks-only";
      checks_only();
      if (stop_after(stage) || cfg_.stage == Stage::ChecksOnly) return finish();
      stage = "unitarize";
      unitarize_stage();
      if (stop_after(stage) || cfg_.stage == Stage::Unitarize) return finish();
      stage = "full-surface";
      surface_stage();
      stop_after(stage);
    } catch (const Error& e) {
      out_.exit_code = kComputeError;
      out_.error = std::string(to_string(e.kind())) + ": " + e.what();
      ordered_json f;
      f["stage"] = stage;
      f["check"] = "error";
      f["error_kind"] = std::string(to_string(e.kind()));
      f["message"] = e.what();
      write_json(cfg_.out / "failure.json", f);
    }
    return finish();
  }

 private:
  void add(const std::string& stage, const std::string& name, double value, double threshold,
           std::optional<std::size_t> sample = std::nullopt, std::string detail = {}) {
    add_result({stage, name, value, threshold, value < threshold, sample, std::move(detail)});
  }

  void add_result(CheckResult c) {
    if (!c.holds && !out_.first_failure) out_.first_failure = c;
    out_.checks.push_back(std::move(c));
  }

  bool stop_after(const std::string& stage) {
    out_.stages_run.push_back(stage);
    if (!out_.first_failure) return false;
    out_.exit_code = kCheckFailed;
    write_json(cfg_.out / "failure.json", check_json(*out_.first_failure));
    return true;
  }

  RunOutcome finish() {
    ordered_json s;
    s["config"] = config_json(cfg_);
    s["stages_run"] = out_.stages_run;
    s["surface_integrated"] = out_.surface_integrated;
    ordered_json checks = ordered_json::array();
    for (const auto& c : out_.checks) checks.push_back(check_json(c));
    s["checks"] = checks;
    s["metrics"] = metrics_;
    s["exit_code"] = out_.exit_code;
    if (out_.error) s["error"] = *out_.error;
    write_json(cfg_.out / "summary.json", s);
    return out_;
  }

  // Admissibility, monodromy, closing, Goldman and hypotheses. No surface integration here.
  void checks_only() {
    const std::string st = "checks-only";
    if (cfg_.variant == Variant::Synthetic) {
      fixture_ = conjugated_unitary_fixture(CircleGrid(cfg_.grid_size), cfg_.fixture_seed, cfg_.fixture_generators);
      const auto ci = inv(fixture_->C);
      double worst = 0.0;
      for (std::size_t k = 0; k < fixture_->generators.size(); ++k) {
        worst = std::max(worst, max_distance(mul(mul(fixture_->C, fixture_->generators[k]), ci), fixture_->unitary[k]));
      }
      add(st, "fixture/conjugation", worst, cfg_.tol.fixture_tol);
      return;
    }

    const AdmissibilityReport adm = admissible(cfg_.form, cfg_.variant == Variant::Trinoid
                                                             ? NoidVariant(cfg_.trinoid)
                                                             : NoidVariant(cfg_.noid));
    for (const auto& c : adm.checks) {
      add_result({st, "admissibility/" + c.id, c.lhs, c.rhs, c.holds, std::nullopt, c.description});
    }
    if (!adm.admissible()) return;

    pot_ = cfg_.potential();
    MonodromyOptions mopt;
    mopt.ode_tol = cfg_.tol.ode_tol;
    ms_ = build_monodromy_set(*pot_, CircleGrid(cfg_.grid_size), mopt);
    const MonodromySet& ms = *ms_;
    write_traces(ms);

    add(st, "relation", ms.relation_residual(), cfg_.tol.relation_tol);
    const ClosingReport closing = closing_check(ms, cfg_.tol.ode_tol);
    for (const auto& e : closing.entries) {
      const std::string at = "(" + num(e.lambda.real()) + "," + num(e.lambda.imag()) + ")";
      add(st, "closing/" + e.generator + "@" + at, e.value_residual, cfg_.tol.closing_tol);
      if (e.derivative_residual >= 0.0) {
        add(st, "closing_derivative/" + e.generator, e.derivative_residual, cfg_.tol.closing_derivative_tol);
      }
    }
    if (ms.symmetry) {
      // (M0 g)^n = -id on every sample.
      const int n = pot_->noid().n;
      const auto [worst, at] = max_over(ms.grid.size(), [&](std::size_t j) {
        const MatX p = MatX(ms.generators[0][j]) * MatX(*ms.symmetry);
        MatX acc = MatX::Identity(2, 2);
        for (int k = 0; k < n; ++k) acc = acc * p;
        return (acc + MatX::Identity(2, 2)).norm();
      });
      add(st, "symmetry/(M0 g)^n+id", worst, cfg_.tol.relation_tol, at);
    }

    const UnitarizeOptions uopt = cfg_.unitarize_options();
    const GoldmanReport gr = goldman_report(ms, uopt);
    write_goldman(ms, gr);
    add(st, "goldman/real_traces", gr.max_imag_trace, cfg_.tol.imag_tol, gr.first_non_real);
    const auto bad = gr.first_not_unitarizable();
    const double worst_t = gr.T.empty() ? 0.0 : -*std::min_element(gr.T.begin(), gr.T.end());
    add_result({st, "goldman/unitarizable", worst_t, cfg_.tol.t_tol, !bad, bad,
                "value is -min T; fails when a sample has a NotUnitarizable verdict"});

    const HypothesisReport hyp = verify_hypotheses(ms, uopt, cfg_.hypothesis_options());
    write_hypotheses(hyp);
    for (const auto& c : hyp.series_checks) {
      add_result({st, "series/" + c.subject + "/" + c.property, c.holds ? 0.0 : 1.0, 0.5, c.holds, std::nullopt,
                  c.detail});
    }
    for (const auto& c : hyp.identities) add(st, "identity/" + c.name, c.relative_error, cfg_.tol.identity_tol);
    add(st, "goldman_consistency", hyp.goldman_consistency, cfg_.tol.goldman_tol);
    metrics_["chi"] = hyp.chi;
    metrics_["min_commutator_det"] = hyp.min_commutator_det;
    metrics_["zero_set_size"] = hyp.zero_set_size;
  }

  void unitarize_stage() {
    const std::string st = "unitarize";
    const UnitarizeOptions uopt = cfg_.unitarize_options();
    if (fixture_) {
      unitarizer_ = unitarize(fixture_->generators, fixture_->names, uopt);
    } else {
      unitarizer_ = unitarize(*ms_, uopt);
    }
    const UnitarizerResult& r = *unitarizer_;
    write_residuals(r);
    for (std::size_t g = 0; g < r.names.size(); ++g) {
      const auto& res = r.residuals[g];
      const auto [worst, at] = max_over(res.size(), [&](std::size_t j) { return res[j]; });
      add(st, "residual/" + r.names[g], worst, cfg_.tol.residual_tol, at);
    }
    for (std::size_t g = 0; g < r.residuals_c_plus.size(); ++g) {
      const auto& res = r.residuals_c_plus[g];
      const auto [worst, at] = max_over(res.size(), [&](std::size_t j) { return res[j]; });
      add(st, "residual_c_plus/" + r.names[g], worst, cfg_.tol.residual_tol, at);
    }
    add(st, "coverage", r.coverage_residual, cfg_.tol.residual_tol);
    if (fixture_) {
      // Known answer: V C^{-1} is unitary.
      const LoopMatrix w = mul(r.V, inv(fixture_->C));
      const auto [worst, at] = max_over(w.size(), [&](std::size_t j) {
        const MatX m = w[j];
        return (m.adjoint() * m - MatX::Identity(2, 2)).norm();
      });
      add(st, "fixture/oracle", worst, cfg_.tol.fixture_tol, at);
    }
    metrics_["max_residual"] = r.max_residual();
    metrics_["max_residual_c_plus"] = r.max_residual_c_plus();
    metrics_["degenerate_samples"] = r.kernel.degenerate;
    metrics_["kernel_fit_residual"] = r.kernel.fit_residual;
  }

  void surface_stage() {
    const std::string st = "full-surface";
    if (!unitarizer_ || !unitarizer_->C_plus) throw Error(ErrorKind::InvalidArgument, "no closing factor C+");
    out_.surface_integrated = true;
    ImmersionMesh mesh = build_surface(*pot_, *unitarizer_->C_plus, cfg_.surface_options());
    const ClosureReport rep = closing_residual(mesh);
    export_obj(mesh, cfg_.out / "mesh.obj");
    export_diagnostics_csv(mesh, cfg_.out / "mesh_diagnostics.csv");
    add(st, "surface/cut", rep.cut_residual, cfg_.tol.closure_tol, std::nullopt, "relative to the diameter");
    if (rep.dihedral_residual) {
      add(st, "surface/dihedral", *rep.dihedral_residual, cfg_.tol.closure_tol, std::nullopt, "relative to the diameter");
    }
    add_result({st, "surface/unitarity", rep.max_unitarity, cfg_.tol.unitarity_tol,
                rep.max_unitarity <= cfg_.tol.unitarity_tol, std::nullopt, {}});
    if (mesh.kind == SpaceFormKind::H3) add(st, "surface/ball", rep.max_ball_radius, 1.0 + 1e-9);
    metrics_["vertices"] = mesh.vertices.size();
    metrics_["faces"] = mesh.faces.size();
    metrics_["diameter"] = rep.diameter;
    metrics_["mean_curvature"] = mesh.mean_curvature;
    metrics_["cut_residual"] = rep.cut_residual;
    if (rep.dihedral_residual) metrics_["dihedral_residual"] = *rep.dihedral_residual;
    if (rep.rotation_angle) metrics_["rotation_angle"] = *rep.rotation_angle;
    if (rep.infinity_spread) metrics_["infinity_spread"] = *rep.infinity_spread;
  }

  void write_traces(const MonodromySet& ms) {
    auto out = open_out(cfg_.out / "traces.csv");
    out << "sample,lambda_re,lambda_im";
    for (const auto& name : ms.names) out << ",t_" << name << "_re,t_" << name << "_im";
    out << '\n';
    std::vector<ScalarLoop> t;
    for (std::size_t k = 0; k < ms.generators.size(); ++k) t.push_back(trace_loop(ms, k));
    for (std::size_t j = 0; j < ms.grid.size(); ++j) {
      const Complex l = ms.grid.point(j);
      out << j << ',' << num(l.real()) << ',' << num(l.imag());
      for (const auto& tk : t) out << ',' << num(tk[j].real()) << ',' << num(tk[j].imag());
      out << '\n';
    }
  }

  void write_goldman(const MonodromySet& ms, const GoldmanReport& gr) {
    auto out = open_out(cfg_.out / "goldman.csv");
    out << "sample,lambda_re,lambda_im,T,verdict,zero_set\n";
    std::vector<bool> zero(gr.T.size(), false);
    for (std::size_t j : gr.zero_set) zero[j] = true;
    for (std::size_t j = 0; j < gr.T.size(); ++j) {
      const Complex l = ms.grid.point(j);
      out << j << ',' << num(l.real()) << ',' << num(l.imag()) << ',' << num(gr.T[j]) << ','
          << to_string(gr.verdicts[j]) << ',' << (zero[j] ? 1 : 0) << '\n';
    }
  }

  void write_hypotheses(const HypothesisReport& hyp) {
    ordered_json j;
    ordered_json series = ordered_json::array();
    for (const auto& c : hyp.series_checks) {
      series.push_back({{"point", complex_json(c.point)},
                        {"subject", c.subject},
                        {"property", c.property},
                        {"holds", c.holds},
                        {"detail", c.detail}});
    }
    ordered_json ids = ordered_json::array();
    for (const auto& c : hyp.identities) {
      ids.push_back({{"name", c.name},
                     {"point", complex_json(c.point)},
                     {"measured", complex_json(c.measured)},
                     {"jet", complex_json(c.jet)},
                     {"expected", complex_json(c.expected)},
                     {"relative_error", c.relative_error},
                     {"holds", c.holds}});
    }
    j["series_checks"] = series;
    j["identities"] = ids;
    j["chi"] = hyp.chi;
    j["goldman_consistency"] = hyp.goldman_consistency;
    j["goldman_consistent"] = hyp.goldman_consistent;
    j["min_commutator_det"] = hyp.min_commutator_det;
    j["zero_set_size"] = hyp.zero_set_size;
    j["all_hold"] = hyp.all_hold();
    write_json(cfg_.out / "hypotheses.json", j);
  }

  void write_residuals(const UnitarizerResult& r) {
    auto out = open_out(cfg_.out / "residuals.csv");
    out << "sample,lambda_re,lambda_im,degenerate,sigma_min,sigma_2";
    for (const auto& name : r.names) out << ",V_" << name;
    if (!r.residuals_c_plus.empty()) {
      for (const auto& name : r.names) out << ",Cplus_" << name;
    }
    out << '\n';
    std::vector<bool> degenerate(r.V.size(), false);
    for (std::size_t j : r.kernel.degenerate) degenerate[j] = true;
    for (std::size_t j = 0; j < r.V.size(); ++j) {
      const Complex l = r.V.grid().point(j);
      out << j << ',' << num(l.real()) << ',' << num(l.imag()) << ',' << (degenerate[j] ? 1 : 0) << ','
          << num(r.kernel.sigma_min[j]) << ',' << num(r.kernel.sigma_2[j]);
      for (const auto& res : r.residuals) out << ',' << num(res[j]);
      for (const auto& res : r.residuals_c_plus) out << ',' << num(res[j]);
      out << '\n';
    }
  }

  const RunConfig& cfg_;
  RunOutcome out_;
  ordered_json metrics_ = ordered_json::object();
  std::optional<NoidPotential> pot_;
  std::optional<MonodromySet> ms_;
  std::optional<ConjugatedUnitaryFixture> fixture_;
  std::optional<UnitarizerResult> unitarizer_;
};

}  // namespace

RunOutcome run(const RunConfig& cfg) {
  if (cfg.threads > 0) set_thread_limit(cfg.threads);
  return Runner(cfg).run();
}

}  // namespace cmcnoid::cli
