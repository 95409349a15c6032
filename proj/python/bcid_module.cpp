// Python bindings for the core library.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bcid/errors.hpp"
#include "bcid/experiment.hpp"
#include "bcid/forward_fdm.hpp"
#include "bcid/kernels.hpp"
#include "bcid/network.hpp"
#include "bcid/problem.hpp"
#include "bcid/quadrature.hpp"

namespace py = pybind11;
using namespace bcid;

namespace {

py::dict metrics_dict(const ExperimentResult& r) {
  py::dict d;
  d["status"] = r.status;
  d["l2_u"] = r.metrics.l2_u;
  d["l2_eps"] = r.metrics.l2_eps;
  d["l2_g"] = r.metrics.l2_g;
  d["final_loss"] = r.final_loss;
  d["wall_seconds"] = r.metrics.wall_seconds;
  d["restarts"] = r.metrics.restarts;
  d["warnings"] = r.metrics.warnings;
  py::list loss1, loss2, l2u;
  for (const auto& e : r.metrics.history) {
    loss1.append(e.loss1);
    loss2.append(e.loss2);
    l2u.append(e.l2_u);
  }
  d["loss1"] = loss1;
  d["loss2"] = loss2;
  d["l2_u_history"] = l2u;
  py::dict regions;
  for (const auto& [name, v] : r.region_estimates) regions[py::str(name)] = v;
  d["regions"] = regions;
  return d;
}

ExperimentConfig resolve(const std::string& text, std::optional<std::uint64_t> seed, std::optional<int> epochs) {
  auto cfg = parse_config(text);
  if (seed) cfg.set_seed(*seed);
  if (epochs) cfg.train.epochs = *epochs;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Boundary-only coefficient identification core";
  m.attr("__version__") = BCID_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<IngestionError>(m, "IngestionError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ContractViolation>(m, "ContractViolation", base.ptr());

  m.def("problem_names", &problem_names, "Preset problem names.");

  m.def(
      "gauss_legendre",
      [](int n) {
        auto r = gauss_legendre(n);
        return py::make_tuple(r.nodes, r.weights);
      },
      py::arg("n"), "Gauss-Legendre nodes and weights on (-1, 1).");

  m.def(
      "fundamental_solution",
      [](const Vector& x, const Vector& y) { return fundamental_solution(x, y, static_cast<int>(x.size())); },
      py::arg("x"), py::arg("y"), "Free-space Green's function of the Laplacian in 2D or 3D.");

  m.def(
      "network_forward",
      [](std::uint64_t seed, const Matrix& x, int width, int blocks) {
        const auto net = init_network(seed, width, static_cast<int>(x.rows()), blocks);
        auto fw = forward_with_gradient(net, x);
        return py::make_tuple(Vector(fw.values), Matrix(fw.gradients));
      },
      py::arg("seed"), py::arg("x"), py::arg("width") = kDefaultWidth, py::arg("blocks") = kDefaultBlocks,
      "Values and spatial gradients of a seeded network at the columns of x (d x n).");

  m.def(
      "solve_forward",
      [](const std::string& problem, double h) {
        const auto p = make_problem(problem);
        const auto g = solve_forward(p.shape, p.eps_exact, p.f, p.dirichlet, h);
        py::dict d;
        d["h"] = g.h;
        d["nodes_per_axis"] = g.nodes_per_axis();
        d["dim"] = g.dim;
        d["values"] = g.values;
        std::vector<bool> inside;
        for (auto k : g.kind) inside.push_back(k != NodeKind::Outside);
        d["inside"] = inside;
        d["flux_imbalance"] = flux_balance(g, p.eps_exact, p.f).imbalance;
        return d;
      },
      py::arg("problem"), py::arg("h"), "Finite-difference solution of a preset problem on its grid.");

  m.def(
      "fit_loglog",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto f = fit_loglog(x, y);
        py::dict d;
        d["slope"] = f.slope;
        d["intercept"] = f.intercept;
        d["std_error"] = f.std_error;
        d["flagged"] = f.flagged;
        return d;
      },
      py::arg("x"), py::arg("y"), "Least-squares slope of log y against log x.");

  m.def(
      "run_experiment",
      [](const std::string& config_text, std::optional<std::uint64_t> seed, std::optional<int> epochs,
         const std::string& out_dir) {
        const auto cfg = resolve(config_text, seed, epochs);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg, out_dir);
        }
        return metrics_dict(r);
      },
      py::arg("config") = "", py::arg("seed") = py::none(), py::arg("epochs") = py::none(), py::arg("out_dir") = "",
      "Train, recover and evaluate one experiment from INI text; returns its metrics.");

  m.def(
      "config_hash",
      [](const std::string& config_text) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                      static_cast<unsigned long long>(fnv1a(canonical_text(parse_config(config_text)))));
        return std::string(buf);
      },
      py::arg("config"), "Hash of the canonical form of an INI configuration.");

  m.def(
      "run_checks",
      [] {
        py::list out;
        for (const auto& c : run_checks()) out.append(py::make_tuple(c.name, c.passed, c.detail));
        return out;
      },
      "Fast invariant suite: list of (name, passed, detail).");
}
