#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>
#include <sstream>

#include "jetplasma/cli.hpp"
#include "jetplasma/errors.hpp"
#include "jetplasma/fields.hpp"
#include "jetplasma/riemann.hpp"
#include "jetplasma/scenario.hpp"

namespace py = pybind11;
using namespace jetplasma;

namespace {

py::object to_python(const RealTensor& t) {
  if (t.rank() == 0) return py::float_(t.data()[0]);
  std::vector<py::ssize_t> shape(t.extents().begin(), t.extents().end());
  py::array_t<double> a(shape);
  std::copy(t.data().begin(), t.data().end(), a.mutable_data());
  return std::move(a);
}

py::dict report_dict(const ResidualReport& r) {
  py::dict d;
  for (const auto& e : r.entries()) d[py::str(e.name)] = to_python(e.value);
  return d;
}

py::tuple gradient(const std::string& text, const std::vector<std::string>& coordinates, const std::vector<double>& point,
                   int order) {
  if (point.size() != coordinates.size()) throw ShapeError("point and coordinates differ in length");
  const ScalarField f = ScalarField::expression(text, coordinates);
  std::vector<int> seeds(point.size());
  std::iota(seeds.begin(), seeds.end(), 0);
  const FieldJet j = field_jet(f, point, seeds, order);
  return py::make_tuple(j.value, j.first, j.second);
}

py::object christoffel(const std::vector<std::string>& upper, const std::vector<double>& point) {
  const int n = static_cast<int>(point.size());
  const auto coords = riemann_coordinates(n);
  std::vector<ScalarField> f;
  for (const auto& s : upper) f.push_back(ScalarField::expression(s, coords));
  riemann::Space space{n, MetricField::from_upper(n, kLatinDown, f)};
  return to_python(riemann::christoffel(space, point));
}

py::tuple run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jetplasma");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Plasma conservation laws on Riemann, Lagrange and multi-time jet spaces";
  m.attr("__version__") = kVersion;

  // Translators run newest first, so the catch-all base goes in before the subclasses.
  static py::exception<Error> base(m, "JetplasmaError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ScenarioError>(m, "ScenarioError", base.ptr());
  py::register_exception<DegenerateMetricError>(m, "DegenerateMetricError", base.ptr());
  py::register_exception<NormalizationError>(m, "NormalizationError", base.ptr());
  py::register_exception<IntegrationError>(m, "IntegrationError", base.ptr());

  py::class_<Scenario>(m, "Scenario")
      .def_static("load", [](const std::string& path) { return load_scenario(path); }, py::arg("path"))
      .def_static("parse", [](const std::string& text, const std::string& base) { return parse_scenario(text, base); },
                  py::arg("text"), py::arg("base_dir") = ".")
      .def_property_readonly("framework", [](const Scenario& s) { return to_string(s.framework); })
      .def_readonly("n", &Scenario::n)
      .def_readonly("p", &Scenario::p)
      .def_readonly("c", &Scenario::c)
      .def_readonly("sha256", &Scenario::sha256)
      .def_readonly("coordinates", &Scenario::coordinates)
      .def_readonly("connection", &Scenario::connection)
      .def("points",
           [](const Scenario& s, std::optional<int> count, std::optional<std::uint64_t> seed) {
             return evaluation_points(s, count, seed);
           },
           py::arg("count") = py::none(), py::arg("seed") = py::none())
      .def("residuals", [](const Scenario& s, const std::vector<double>& pt) { return report_dict(scenario_residuals(s, pt)); },
           py::arg("point"))
      .def("invariant_names", &scenario_invariant_names);

  m.def("gradient", &gradient, py::arg("expression"), py::arg("coordinates"), py::arg("point"), py::arg("order") = 2,
        "Value, first and second partials of an expression at a point.");
  m.def("christoffel", &christoffel, py::arg("metric_upper"), py::arg("point"),
        "Christoffel symbols [i, j, k] of a metric given by its upper triangle in x1..xn.");
  m.def("format_double", &format_double);
  m.def("sha256_hex", [](const py::bytes& b) { return sha256_hex(std::string(b)); });
  m.def("run_cli", &run_cli, py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr).");
}
