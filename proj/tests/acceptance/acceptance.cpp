// Acceptance gate: one PASS/FAIL line per criterion.
//   bcid_acceptance <1..8|all> [--work DIR]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "bcid/assembly.hpp"
#include "bcid/errors.hpp"
#include "bcid/experiment.hpp"
#include "bcid/forward_fdm.hpp"
#include "bcid/kernels.hpp"
#include "bcid/problem.hpp"
#include "gradcheck.hpp"

namespace fs = std::filesystem;
using namespace bcid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_work = "acceptance_runs";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig config(const std::string& name) { return load_config(std::string(BCID_SOURCE_DIR "/configs/") + name); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome green_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_r1 = 0.0, worst_u = 0.0;
  for (const char* name : {"harmonic_constant", "harmonic_x", "harmonic_saddle"}) {
    const auto problem = make_problem(name);
    const auto data = prepare_data(problem);
    const auto colloc = build_collocation(problem.shape, CollocationConfig{}, data.values);
    const auto kernels = precompute(colloc, 2);
    const auto terms = boundary_terms(colloc, kernels);
    const Vector r1 = residual_r1(terms, kernels, colloc, zero_network(2));
    worst_r1 = std::max(worst_r1, r1.cwiseAbs().maxCoeff());
    // with g = 0: u(p) = integral of (q u* - u du*/dn) over the boundary
    for (int k = 0; k < 20; ++k) {
      const Point p = make_point(0.05 + 0.9 * ((k * 7) % 20) / 19.0, 0.05 + 0.9 * k / 19.0);
      double u = 0.0;
      for (const auto& n : colloc.boundary_nodes)
        u += (fundamental_solution(p, n.position, 2) * *n.neumann -
              *n.dirichlet * normal_derivative(p, n.position, n.normal, 2)) * n.weight;
      worst_u = std::max(worst_u, std::abs(u - problem.u_exact(p)));
    }
  }
  const double t = seconds_since(t0);
  return {worst_r1 <= 1e-3 && worst_u <= 2e-3 && t < 5.0,
          "max|R1| = " + fmt(worst_r1) + " (<= 1e-3), reconstruction error = " + fmt(worst_u) + " (<= 2e-3), " +
              fmt(t) + " s (< 5)"};
}

Outcome laplace() {
  const auto cfg = config("laplace_2d.ini");
  const auto dir = g_work / "criterion2";
  const auto r = run_experiment(cfg, dir);
  const auto report = slurp(dir / "report.md");
  const bool context = report.find("PINN") != std::string::npos && report.find("0.0143") != std::string::npos;
  const double t = r.metrics.wall_seconds;
  const bool ok = r.metrics.history.size() <= 2000 && r.metrics.l2_u <= 0.05 && r.metrics.l2_eps <= 0.05 && context &&
                  t <= 600;
  return {ok, "u L2 = " + fmt(r.metrics.l2_u) + " (<= 0.05), eps L2 = " + fmt(r.metrics.l2_eps) +
                  " (<= 0.05), context table " + (context ? "present" : "missing") + ", " + fmt(t) + " s (<= 600)"};
}

Outcome piecewise() {
  const auto r = run_experiment(config("piecewise_2d.ini"), g_work / "criterion3");
  const double t = r.metrics.wall_seconds;
  std::string regions;
  for (const auto& [name, v] : r.region_estimates) regions += " " + name + "=" + fmt(v);
  return {r.metrics.l2_u <= 0.03 && r.metrics.l2_eps <= 0.15 && t <= 900,
          "u L2 = " + fmt(r.metrics.l2_u) + " (<= 0.03), medium L2 = " + fmt(r.metrics.l2_eps) + " (<= 0.15), regions" +
              regions + ", " + fmt(t) + " s (<= 900)"};
}

Outcome cube() {
  const auto dir = g_work / "criterion4";
  const auto r = run_experiment(config("cube_3d.ini"), dir);
  bool slices = true;
  for (const char* plane : {"x1x2", "x1x3", "x2x3"})
    for (const char* field : {"u", "eps"})
      slices = slices && fs::exists(dir / ("field_" + std::string(field) + "_" + plane + ".csv"));
  const double t = r.metrics.wall_seconds;
  const auto epochs = r.metrics.history.size();
  return {epochs == 500 && r.metrics.l2_u <= 0.10 && slices && t <= 1800,
          std::to_string(epochs) + " epochs, u L2 = " + fmt(r.metrics.l2_u) + " (<= 0.10), slices " +
              (slices ? "written" : "missing") + ", " + fmt(t) + " s (<= 1800)"};
}

Outcome convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_convergence_study(config("convergence.ini"), g_work / "criterion5");
  const double t = seconds_since(t0);
  std::string ladder;
  for (const auto& row : r.rows) ladder += " " + std::to_string(row.m_b) + ":" + fmt(row.l2_u);
  return {r.fit.slope <= -1.0 && t <= 2700, "slope = " + fmt(r.fit.slope) + " +- " + fmt(r.fit.std_error) +
                                                " (<= -1.0), mean u L2 by m_b" + ladder + ", " + fmt(t) + " s (<= 2700)"};
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double wp = 0.0, ws = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = gradcheck::check(gradcheck::random_draw(1000 + seed, seed % 2 == 0 ? 2 : 3));
    wp = std::max(wp, r.max_param_error);
    ws = std::max(ws, r.max_spatial_error);
  }
  const double t = seconds_since(t0);
  return {wp < 1e-5 && ws < 1e-5 && t < 10, "max relative error: parameters " + fmt(wp) + ", spatial " + fmt(ws) +
                                                " (< 1e-5), " + fmt(t) + " s (< 10)"};
}

Outcome fdm() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = make_problem("laplace_2d");
  std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64}, errs;
  for (double h : hs) {
    const auto g = solve_forward(p.shape, p.eps_exact, p.f, p.u_exact, h);
    double e = 0.0;
    for (int j = 0; j < g.nodes_per_axis(); ++j)
      for (int i = 0; i < g.nodes_per_axis(); ++i) e = std::max(e, std::abs(g.at(i, j) - p.u_exact(g.position(i, j))));
    errs.push_back(e);
  }
  const double order = -fit_loglog(std::vector<double>{16, 32, 64}, errs).slope;
  const ScalarField one = [](const Point&) { return 1.0; };
  const ScalarField f = [](const Point& x) { return 1.0 + x(0) * x(1); };
  const ScalarField d = [](const Point& x) { return std::sin(3 * x(0)) * x(1); };
  double imbalance = 0.0;
  for (auto shape : {DomainShape::UnitSquare, DomainShape::LShape})
    imbalance = std::max(imbalance, flux_balance(solve_forward(shape, one, f, d, 1.0 / 32), one, f).imbalance);
  const double t = seconds_since(t0);
  return {order >= 1.8 && order <= 2.2 && imbalance <= 1e-6 && t < 30,
          "observed order = " + fmt(order) + " (in [1.8, 2.2]), flux imbalance = " + fmt(imbalance) + " (<= 1e-6), " +
              fmt(t) + " s (< 30)"};
}

Outcome determinism() {
  const auto cfg = config("laplace_2d.ini");
  run_experiment(cfg, g_work / "criterion8a");
  run_experiment(cfg, g_work / "criterion8b");
  const auto a = slurp(g_work / "criterion8a" / "metrics.csv");
  const auto b = slurp(g_work / "criterion8b" / "metrics.csv");
  return {!a.empty() && a == b, "metrics.csv " + std::to_string(a.size()) + " bytes, " +
                                    (a == b ? "byte-identical" : "differs") + " across two runs"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const Criterion kCriteria[] = {
    {1, "boundary identity oracle", green_identity},
    {2, "Laplace benchmark", laplace},
    {3, "piecewise medium on the L-shape", piecewise},
    {4, "3D cube", cube},
    {5, "convergence in boundary samples", convergence},
    {6, "gradient correctness", gradients},
    {7, "forward solver order and flux balance", fdm},
    {8, "determinism", determinism},
};

bool run_one(const Criterion& c) {
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
            << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::string which = argc > 1 ? argv[1] : "all";
  for (int i = 2; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--work") g_work = argv[i + 1];
  fs::create_directories(g_work);
  bool ok = true;
  bool matched = false;
  for (const auto& c : kCriteria) {
    if (which != "all" && which != std::to_string(c.id)) continue;
    matched = true;
    ok = run_one(c) && ok;
  }
  if (!matched) {
    std::cerr << "usage: bcid_acceptance <1..8|all> [--work DIR]\n";
    return 2;
  }
  return ok ? 0 : 1;
}
