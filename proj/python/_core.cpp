// Python bindings for the pconvex core. Arrays cross the boundary as NumPy
// via pybind11/eigen; config runs return records as JSON text.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "config.hpp"
#include "experiment.hpp"
#include "pconvex/convexity.hpp"
#include "pconvex/discrete.hpp"
#include "pconvex/errors.hpp"
#include "pconvex/solver.hpp"

namespace py = pybind11;
using namespace pconvex;

namespace {

std::span<const double> as_span(const Eigen::VectorXd& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

Field field_of(const std::string& src, int n) { return ScalarFieldExpr::parse(src, n).as_field(); }

CubicalComplex box_complex(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double h,
                           const std::optional<std::string>& r) {
  if (lo.size() != hi.size()) throw ShapeError("lo and hi differ in length");
  std::optional<Field> rf;
  if (r) rf = field_of(*r, static_cast<int>(lo.size()));
  return build_complex(GridDomain::box(as_span(lo), as_span(hi), h, rf));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weighted L2 estimates for d on p-convex domains";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", error.ptr());
  py::register_exception<SyntaxError>(m, "SyntaxError", error.ptr());
  py::register_exception<NotClosed>(m, "NotClosed", error.ptr());
  py::register_exception<CohomologyObstruction>(m, "CohomologyObstruction", error.ptr());
  py::register_exception<app::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("binomial", &binomial);
  m.def(
      "min_p_trace", [](const Eigen::MatrixXd& theta, int p) { return min_p_trace(QuadraticForm(theta), p); },
      py::arg("theta"), py::arg("p"));
  m.def(
      "p_positivity",
      [](const Eigen::MatrixXd& theta, int p) {
        const auto r = is_p_positive(QuadraticForm(theta), p);
        return py::make_tuple(to_string(r.verdict), r.min_p_trace);
      },
      py::arg("theta"), py::arg("p"), "(verdict, min p-trace) with verdict in fail/semi/strict");
  m.def(
      "F_matrix", [](const Eigen::MatrixXd& theta, int p) { return F_matrix(QuadraticForm(theta), p); },
      py::arg("theta"), py::arg("p"));

  py::class_<ScalarFieldExpr>(m, "Expr")
      .def(py::init(&ScalarFieldExpr::parse), py::arg("source"), py::arg("n"))
      .def_property_readonly("dim", &ScalarFieldExpr::dim)
      .def("__call__", [](const ScalarFieldExpr& e, const Eigen::VectorXd& x) { return e.eval(as_span(x)); })
      .def("jet",
           [](const ScalarFieldExpr& e, const Eigen::VectorXd& x) {
             const Jet2 j = e.eval_jet2(as_span(x));
             return py::make_tuple(j.value, j.grad, j.hess);
           })
      .def("__str__", &ScalarFieldExpr::to_string);

  py::class_<CubicalComplex>(m, "Complex")
      .def(py::init(&box_complex), py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("r") = std::nullopt,
           "cubical complex of the box cells with r < 0 (the whole box when r is omitted)")
      .def_property_readonly("dim", &CubicalComplex::dim)
      .def_property_readonly("h", &CubicalComplex::h)
      .def("count", &CubicalComplex::count)
      .def("euler_characteristic", &CubicalComplex::euler_characteristic)
      .def(
          "d", [](const CubicalComplex& cx, int p, const Eigen::VectorXd& c) { return apply_d(cx, p, c); },
          py::arg("p"), py::arg("cochain"))
      .def(
          "sample",
          [](const CubicalComplex& cx, const std::vector<std::string>& coeffs, int p) {
            std::vector<Field> fs;
            for (const auto& s : coeffs) fs.push_back(field_of(s, cx.dim()));
            return sample_cochain(cx, fs, p).values;
          },
          py::arg("coefficients"), py::arg("p"));

  m.def(
      "minimal_solution",
      [](const CubicalComplex& cx, int p, const Eigen::VectorXd& f, const std::string& phi, double tol) {
        SolveOptions opts;
        opts.tol = tol;
        const auto s = minimal_solution(cx, Cochain{p, f}, field_of(phi, cx.dim()), opts);
        return py::make_tuple(s.u.values, s.residual, s.iterations);
      },
      py::arg("complex"), py::arg("p"), py::arg("f"), py::arg("phi"), py::arg("tol") = 1e-12,
      "(u, relative residual, iterations) for the minimal-norm solution of du = f");
  m.def(
      "hormander_ratio",
      [](const CubicalComplex& cx, int p, const Eigen::VectorXd& f, const std::string& phi) {
        return hormander_report(cx, Cochain{p, f}, field_of(phi, cx.dim())).ratio;
      },
      py::arg("complex"), py::arg("p"), py::arg("f"), py::arg("phi"));
  m.def(
      "cohomology_rank",
      [](const CubicalComplex& cx, int p, const std::string& phi) {
        return cohomology_rank(cx, p, field_of(phi, cx.dim())).rank;
      },
      py::arg("complex"), py::arg("p"), py::arg("phi") = "0");

  m.def(
      "run_config",
      [](const std::string& text, std::optional<std::uint64_t> seed) {
        std::istringstream in(text);
        const auto res = app::run_experiment(app::IniFile::parse(in), seed);
        std::vector<std::string> records;
        for (const auto& r : res.records) records.push_back(r.dump());
        return py::make_tuple(res.task, res.pass, records);
      },
      py::arg("text"), py::arg("seed") = std::nullopt, "(task, pass, records as JSON strings)");
  m.def("builtins", &app::builtins_text);
}
