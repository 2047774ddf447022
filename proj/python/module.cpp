#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tsbsde/bsde.hpp"
#include "tsbsde/errors.hpp"
#include "tsbsde/parallel.hpp"
#include "tsbsde/runner.hpp"
#include "tsbsde/scenario.hpp"
#include "tsbsde/stochastic.hpp"
#include "tsbsde/timescale.hpp"

namespace py = pybind11;
using namespace tsbsde;

namespace {

py::dict artifacts_dict(const Artifacts& artifacts) {
  py::dict d;
  for (const Artifact& a : artifacts) d[py::str(a.name)] = py::str(a.content);
  return d;
}

}  // namespace

PYBIND11_MODULE(_tsbsde, m) {
  m.doc() = "Backward stochastic dynamic equations on time scales";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<TimeScale>(m, "TimeScale")
      .def(py::init([](const std::string& literal) { return TimeScale::parse(literal); }), py::arg("literal"))
      .def_static("interval", &TimeScale::interval, py::arg("hi"))
      .def_property_readonly("horizon", &TimeScale::horizon)
      .def("contains", &TimeScale::contains)
      .def("sigma", &TimeScale::sigma)
      .def("rho", &TimeScale::rho)
      .def("mu", &TimeScale::mu)
      .def("nu", &TimeScale::nu)
      .def("nabla_measure", &TimeScale::nabla_measure, py::arg("a"), py::arg("b"))
      .def("exp_beta", &TimeScale::exp_beta, py::arg("beta"), py::arg("t"), py::arg("t0") = 0.0)
      .def("__str__", &TimeScale::to_string)
      .def("__repr__", [](const TimeScale& s) { return "TimeScale('" + s.to_string() + "')"; });

  py::class_<GridScale>(m, "GridScale")
      .def(py::init<TimeScale, double>(), py::arg("scale"), py::arg("delta"))
      .def_property_readonly("delta", &GridScale::delta)
      .def_property_readonly("steps", &GridScale::steps)
      .def_property_readonly("resolves_scale", &GridScale::resolves_scale)
      .def("times", [](const GridScale& g) { return std::vector<double>(g.times().begin(), g.times().end()); })
      .def("nu", [](const GridScale& g) {
        std::vector<double> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = g.nu(i);
        return v;
      });

  m.def("partition", &partition, py::arg("scale"), py::arg("delta"));

  m.def(
      "sample_bm",
      [](const GridScale& grid, std::size_t dims, std::size_t paths, std::uint64_t seed) {
        const PathEnsemble e = sample_bm(grid, dims, paths, seed);
        py::array_t<double> out({paths, grid.size(), dims});
        std::copy(e.raw().begin(), e.raw().end(), out.mutable_data());
        return out;
      },
      py::arg("grid"), py::arg("dims"), py::arg("paths"), py::arg("seed"),
      "Brownian motion on the grid as an array of shape (paths, points, dims).");

  m.def(
      "run",
      [](const std::string& command, const std::string& scenario_text) {
        const Scenario sc = Scenario::parse(scenario_text);
        py::gil_scoped_release release;
        Artifacts a = run_command(command, sc);
        py::gil_scoped_acquire acquire;
        return artifacts_dict(a);
      },
      py::arg("command"), py::arg("scenario"),
      "Runs a subcommand on scenario text; returns {file name: contents}.");

  m.def(
      "canonical_scenario", [](const std::string& text) { return Scenario::parse(text).emit(); }, py::arg("scenario"));

  m.def(
      "gaussian_linear_reference",
      [](double a, double b, double c, double horizon, const std::string& terminal, double strike) {
        TerminalCondition t;
        t.kind = parse_terminal_kind(terminal);
        t.strike = strike;
        return gaussian_linear_reference(a, b, c, horizon, t);
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("horizon"), py::arg("terminal") = "identity",
      py::arg("strike") = 0.0);

  m.def("set_thread_count", &set_thread_count, py::arg("n"));
  m.def("thread_count", &thread_count);
}
