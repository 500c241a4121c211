#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cmcnoid/error.hpp"
#include "cmcnoid/iwasawa.hpp"
#include "cmcnoid/monodromy.hpp"
#include "cmcnoid/parallel.hpp"
#include "cmcnoid/potential.hpp"
#include "cmcnoid/surface.hpp"
#include "cmcnoid/unitarize.hpp"

namespace py = pybind11;
using namespace cmcnoid;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

// Loops cross the boundary as (N, n, n) complex arrays; sample j sits at
// lambda = exp(2 pi i j / N).
ComplexArray to_numpy(const LoopMatrix& f) {
  const auto n = static_cast<py::ssize_t>(f.dim());
  ComplexArray out({static_cast<py::ssize_t>(f.size()), n, n});
  auto a = out.mutable_unchecked<3>();
  for (std::size_t j = 0; j < f.size(); ++j) {
    const auto m = f[j];
    for (py::ssize_t r = 0; r < n; ++r)
      for (py::ssize_t c = 0; c < n; ++c) a(static_cast<py::ssize_t>(j), r, c) = m(r, c);
  }
  return out;
}

LoopMatrix from_numpy(const ComplexArray& arr) {
  if (arr.ndim() != 3 || arr.shape(1) != arr.shape(2)) {
    throw Error(ErrorKind::InvalidArgument, "loop samples must have shape (N, n, n)");
  }
  const auto a = arr.unchecked<3>();
  const CircleGrid grid(static_cast<std::size_t>(arr.shape(0)));
  LoopMatrix f(grid, static_cast<int>(arr.shape(1)));
  for (py::ssize_t j = 0; j < arr.shape(0); ++j) {
    auto m = f[static_cast<std::size_t>(j)];
    for (py::ssize_t r = 0; r < arr.shape(1); ++r)
      for (py::ssize_t c = 0; c < arr.shape(2); ++c) m(r, c) = a(j, r, c);
  }
  return f;
}

std::vector<ComplexArray> to_numpy(const std::vector<LoopMatrix>& fs) {
  std::vector<ComplexArray> out;
  for (const auto& f : fs) out.push_back(to_numpy(f));
  return out;
}

std::vector<LoopMatrix> from_numpy(const std::vector<ComplexArray>& arrs) {
  std::vector<LoopMatrix> out;
  for (const auto& a : arrs) out.push_back(from_numpy(a));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simultaneous unitarization of loop monodromies and CMC n-noid surfaces.";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&]() { return py::object(py::exception<Error>(m, "Error")); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = error_type.get_stored();
      py::object inst = type(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      inst.attr("sample") = e.sample();
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  m.def("set_thread_limit", &set_thread_limit, py::arg("limit"), "Worker cap for sample loops, 0 for all cores.");
  m.def("thread_limit", &thread_limit);

  // Space forms and potentials.
  py::enum_<SpaceFormKind>(m, "SpaceFormKind")
      .value("R3", SpaceFormKind::R3)
      .value("S3", SpaceFormKind::S3)
      .value("H3", SpaceFormKind::H3);

  py::class_<SpaceForm>(m, "SpaceForm")
      .def_static("r3", &SpaceForm::r3)
      .def_static("s3", &SpaceForm::s3, py::arg("lambda0"))
      .def_static("h3", &SpaceForm::h3, py::arg("s"))
      .def_readonly("kind", &SpaceForm::kind)
      .def_readonly("lambda0", &SpaceForm::lambda0)
      .def("closing_points", &SpaceForm::closing_points)
      .def("mean_curvature", &SpaceForm::mean_curvature)
      .def("__repr__", [](const SpaceForm& f) { return "<SpaceForm " + to_string(f.kind) + ">"; });

  py::class_<Trinoid>(m, "Trinoid")
      .def(py::init([](double w0, double w1, double winf) { return Trinoid{w0, w1, winf}; }), py::arg("w0"),
           py::arg("w1"), py::arg("winf"))
      .def_readwrite("w0", &Trinoid::w0)
      .def_readwrite("w1", &Trinoid::w1)
      .def_readwrite("winf", &Trinoid::winf);

  py::class_<SymmetricNoid>(m, "SymmetricNoid")
      .def(py::init([](int n, double w) { return SymmetricNoid{n, w}; }), py::arg("n"), py::arg("w"))
      .def_readwrite("n", &SymmetricNoid::n)
      .def_readwrite("w", &SymmetricNoid::w);

  py::class_<NoidPotential>(m, "NoidPotential")
      .def(py::init([](const SpaceForm& form, const Trinoid& t) { return NoidPotential(form, t); }), py::arg("form"),
           py::arg("variant"))
      .def(py::init([](const SpaceForm& form, const SymmetricNoid& s) { return NoidPotential(form, s); }),
           py::arg("form"), py::arg("variant"))
      .def_property_readonly("form", &NoidPotential::form)
      .def("is_trinoid", &NoidPotential::is_trinoid)
      .def("basepoint", &NoidPotential::basepoint)
      .def("poles", &NoidPotential::poles)
      .def("weights", &NoidPotential::weights)
      .def("q", &NoidPotential::q, py::arg("z"))
      .def("xi_at", &NoidPotential::xi_at, py::arg("z"), py::arg("lambda_"));

  m.def("rho", &rho, py::arg("lambda_"), py::arg("w"), py::arg("lambda0"));
  m.def("chi", &chi, py::arg("w0"), py::arg("w1"), py::arg("winf"));
  m.def("symmetry_matrix", &symmetry_matrix, py::arg("n"));

  // Admissibility.
  py::class_<InequalityCheck>(m, "InequalityCheck")
      .def_readonly("id", &InequalityCheck::id)
      .def_readonly("description", &InequalityCheck::description)
      .def_readonly("lhs", &InequalityCheck::lhs)
      .def_readonly("rhs", &InequalityCheck::rhs)
      .def_readonly("holds", &InequalityCheck::holds);

  py::class_<AdmissibilityReport>(m, "AdmissibilityReport")
      .def_readonly("checks", &AdmissibilityReport::checks)
      .def("admissible", &AdmissibilityReport::admissible)
      .def("first_failure", &AdmissibilityReport::first_failure);

  m.def("admissible", [](const SpaceForm& f, const Trinoid& t) { return admissible(f, t); }, py::arg("form"),
        py::arg("variant"));
  m.def("admissible", [](const SpaceForm& f, const SymmetricNoid& s) { return admissible(f, s); }, py::arg("form"),
        py::arg("variant"));

  // Monodromy.
  py::class_<MonodromySet>(m, "MonodromySet")
      .def_property_readonly("grid_size", [](const MonodromySet& ms) { return ms.grid.size(); })
      .def_property_readonly("generators", [](const MonodromySet& ms) { return to_numpy(ms.generators); })
      .def_readonly("names", &MonodromySet::names)
      .def_readonly("symmetry", &MonodromySet::symmetry)
      .def("unitarization_triple", [](const MonodromySet& ms) { return to_numpy(ms.unitarization_triple()); })
      .def("relation_residual", &MonodromySet::relation_residual);

  m.def(
      "build_monodromy_set",
      [](const NoidPotential& pot, std::size_t grid_size, double ode_tol, double loop_radius) {
        return build_monodromy_set(pot, CircleGrid(grid_size), MonodromyOptions{ode_tol, loop_radius});
      },
      py::arg("potential"), py::arg("grid_size") = 256, py::arg("ode_tol") = 1e-10, py::arg("loop_radius") = 0.25,
      py::call_guard<py::gil_scoped_release>());
  m.def("generators_at", &generators_at, py::arg("monodromy"), py::arg("lambda_"), py::arg("ode_tol") = 1e-10);

  py::class_<ClosingReport::Entry>(m, "ClosingEntry")
      .def_readonly("generator", &ClosingReport::Entry::generator)
      .def_readonly("lambda_", &ClosingReport::Entry::lambda)
      .def_readonly("value_residual", &ClosingReport::Entry::value_residual)
      .def_readonly("derivative_residual", &ClosingReport::Entry::derivative_residual);
  py::class_<ClosingReport>(m, "ClosingReport")
      .def_readonly("entries", &ClosingReport::entries)
      .def("max_value_residual", &ClosingReport::max_value_residual)
      .def("max_derivative_residual", &ClosingReport::max_derivative_residual);
  m.def("closing_check", &closing_check, py::arg("monodromy"), py::arg("ode_tol") = 1e-10,
        py::call_guard<py::gil_scoped_release>());

  // Goldman and unitarization.
  py::enum_<Verdict>(m, "Verdict")
      .value("Unitarizable", Verdict::Unitarizable)
      .value("Reducible", Verdict::Reducible)
      .value("NotUnitarizable", Verdict::NotUnitarizable);

  py::class_<IwasawaOptions>(m, "IwasawaOptions")
      .def(py::init<>())
      .def_readwrite("degree", &IwasawaOptions::degree)
      .def_readwrite("tol", &IwasawaOptions::tol)
      .def_readwrite("tail_tol", &IwasawaOptions::tail_tol)
      .def_readwrite("max_iterations", &IwasawaOptions::max_iterations);

  py::class_<UnitarizeOptions>(m, "UnitarizeOptions")
      .def(py::init<>())
      .def_readwrite("t_tol", &UnitarizeOptions::t_tol)
      .def_readwrite("imag_tol", &UnitarizeOptions::imag_tol)
      .def_readwrite("herm_tol", &UnitarizeOptions::herm_tol)
      .def_readwrite("chol_tol", &UnitarizeOptions::chol_tol)
      .def_readwrite("seed", &UnitarizeOptions::seed)
      .def_readwrite("iwasawa_positive_part", &UnitarizeOptions::iwasawa_positive_part)
      .def_readwrite("iwasawa", &UnitarizeOptions::iwasawa);

  py::class_<GoldmanReport>(m, "GoldmanReport")
      .def_readonly("T", &GoldmanReport::T)
      .def_readonly("zero_set", &GoldmanReport::zero_set)
      .def_readonly("verdicts", &GoldmanReport::verdicts)
      .def_readonly("max_imag_trace", &GoldmanReport::max_imag_trace)
      .def("first_not_unitarizable", &GoldmanReport::first_not_unitarizable);
  m.def("goldman_report", &goldman_report, py::arg("monodromy"), py::arg("options") = UnitarizeOptions{});

  py::class_<UnitarizerResult>(m, "UnitarizerResult")
      .def_property_readonly("X", [](const UnitarizerResult& r) { return to_numpy(r.X); })
      .def_property_readonly("V", [](const UnitarizerResult& r) { return to_numpy(r.V); })
      .def_property_readonly("C_plus",
                             [](const UnitarizerResult& r) -> std::optional<ComplexArray> {
                               if (!r.C_plus) return std::nullopt;
                               return to_numpy(*r.C_plus);
                             })
      .def_readonly("names", &UnitarizerResult::names)
      .def_readonly("residuals", &UnitarizerResult::residuals)
      .def_readonly("residuals_c_plus", &UnitarizerResult::residuals_c_plus)
      .def_readonly("coverage_residual", &UnitarizerResult::coverage_residual)
      .def_property_readonly("degenerate", [](const UnitarizerResult& r) { return r.kernel.degenerate; })
      .def("max_residual", &UnitarizerResult::max_residual)
      .def("max_residual_c_plus", &UnitarizerResult::max_residual_c_plus);

  m.def(
      "unitarize", [](const MonodromySet& ms, const UnitarizeOptions& opt) { return unitarize(ms, opt); },
      py::arg("monodromy"), py::arg("options") = UnitarizeOptions{}, py::call_guard<py::gil_scoped_release>());
  m.def(
      "unitarize",
      [](const std::vector<ComplexArray>& generators, std::vector<std::string> names, const UnitarizeOptions& opt) {
        const auto loops = from_numpy(generators);
        if (names.empty()) {
          for (std::size_t k = 0; k < loops.size(); ++k) names.push_back("M" + std::to_string(k));
        }
        py::gil_scoped_release release;
        return unitarize(loops, names, opt);
      },
      py::arg("generators"), py::arg("names") = std::vector<std::string>{}, py::arg("options") = UnitarizeOptions{});
  m.def("unitarity_residuals",
        [](const ComplexArray& v, const ComplexArray& mm) { return unitarity_residuals(from_numpy(v), from_numpy(mm)); },
        py::arg("V"), py::arg("M"));

  m.def(
      "conjugated_unitary_fixture",
      [](std::size_t grid_size, std::uint64_t seed, int generators) {
        const auto fx = conjugated_unitary_fixture(CircleGrid(grid_size), seed, generators);
        py::dict out;
        out["generators"] = to_numpy(fx.generators);
        out["names"] = fx.names;
        out["unitary"] = to_numpy(fx.unitary);
        out["C"] = to_numpy(fx.C);
        return out;
      },
      py::arg("grid_size"), py::arg("seed"), py::arg("generators") = 3,
      "Generators C^-1 U_k C with SU(2) loops U_k; any unitarizer V makes V C^-1 unitary.");

  // Iwasawa.
  m.def(
      "iwasawa",
      [](const ComplexArray& phi, const IwasawaOptions& opt) {
        const LoopMatrix loop = from_numpy(phi);
        IwasawaFactors f;
        {
          py::gil_scoped_release release;
          f = iwasawa(loop, opt);
        }
        py::dict out;
        out["F"] = to_numpy(f.F);
        out["B"] = to_numpy(f.B);
        out["residual"] = f.residual;
        out["unitarity"] = f.unitarity;
        out["negative_tail"] = f.negative_tail;
        out["iterations"] = f.iterations;
        out["tolerance"] = f.tolerance;
        return out;
      },
      py::arg("phi"), py::arg("options") = IwasawaOptions{}, "Phi = F B with F unitary and B holomorphic inside.");

  // Surfaces.
  py::class_<MeshOptions>(m, "MeshOptions")
      .def(py::init<>())
      .def_readwrite("radial", &MeshOptions::radial)
      .def_readwrite("angular", &MeshOptions::angular)
      .def_readwrite("end_guard", &MeshOptions::end_guard)
      .def_readwrite("outer_radius", &MeshOptions::outer_radius);

  py::class_<SurfaceOptions>(m, "SurfaceOptions")
      .def(py::init<>())
      .def_readwrite("mesh", &SurfaceOptions::mesh)
      .def_readwrite("grid_size", &SurfaceOptions::grid_size)
      .def_readwrite("max_grid_size", &SurfaceOptions::max_grid_size)
      .def_readwrite("alias_tol", &SurfaceOptions::alias_tol)
      .def_readwrite("ode_tol", &SurfaceOptions::ode_tol)
      .def_readwrite("mean_curvature", &SurfaceOptions::mean_curvature)
      .def_readwrite("unitarity_tol", &SurfaceOptions::unitarity_tol)
      .def_readwrite("iwasawa", &SurfaceOptions::iwasawa);

  py::class_<ImmersionMesh>(m, "ImmersionMesh")
      .def_property_readonly("points",
                             [](const ImmersionMesh& mesh) {
                               py::array_t<double> out({static_cast<py::ssize_t>(mesh.vertices.size()),
                                                        py::ssize_t{3}});
                               auto a = out.mutable_unchecked<2>();
                               for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
                                 for (int c = 0; c < 3; ++c) a(static_cast<py::ssize_t>(v), c) = mesh.vertices[v].x[c];
                               return out;
                             })
      .def_property_readonly("z",
                             [](const ImmersionMesh& mesh) {
                               std::vector<Complex> z;
                               for (const auto& v : mesh.vertices) z.push_back(v.z);
                               return py::array(py::cast(z));
                             })
      .def_property_readonly("chart",
                             [](const ImmersionMesh& mesh) {
                               std::vector<int> c;
                               for (const auto& v : mesh.vertices) c.push_back(v.chart);
                               return py::array(py::cast(c));
                             })
      .def_property_readonly("unitarity",
                             [](const ImmersionMesh& mesh) {
                               std::vector<double> u;
                               for (const auto& v : mesh.vertices) u.push_back(v.unitarity);
                               return py::array(py::cast(u));
                             })
      .def_readonly("faces", &ImmersionMesh::faces)
      .def_readonly("chart_count", &ImmersionMesh::chart_count)
      .def_readonly("symmetry_order", &ImmersionMesh::symmetry_order)
      .def("diameter", &ImmersionMesh::diameter);

  py::class_<ClosureReport>(m, "ClosureReport")
      .def_readonly("diameter", &ClosureReport::diameter)
      .def_readonly("cut_residual", &ClosureReport::cut_residual)
      .def_readonly("cut_pairs", &ClosureReport::cut_pairs)
      .def_readonly("dihedral_residual", &ClosureReport::dihedral_residual)
      .def_readonly("rotation_angle", &ClosureReport::rotation_angle)
      .def_readonly("infinity_spread", &ClosureReport::infinity_spread)
      .def_readonly("max_unitarity", &ClosureReport::max_unitarity)
      .def_readonly("max_ball_radius", &ClosureReport::max_ball_radius);

  m.def(
      "build_surface",
      [](const NoidPotential& pot, const ComplexArray& c_plus, const SurfaceOptions& opt) {
        const LoopMatrix cp = from_numpy(c_plus);
        py::gil_scoped_release release;
        return build_surface(pot, cp, opt);
      },
      py::arg("potential"), py::arg("c_plus"), py::arg("options") = SurfaceOptions{});
  m.def("closing_residual", &closing_residual, py::arg("mesh"));
  m.def("export_obj", &export_obj, py::arg("mesh"), py::arg("path"));
  m.def("export_diagnostics_csv", &export_diagnostics_csv, py::arg("mesh"), py::arg("path"));
}
