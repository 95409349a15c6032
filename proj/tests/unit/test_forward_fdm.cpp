#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "bcid/boundary_data.hpp"
#include "bcid/errors.hpp"
#include "bcid/forward_fdm.hpp"
#include "bcid/problem.hpp"
#include "doctest.h"

using namespace bcid;

namespace {

double max_grid_error(const Grid& g, const ScalarField& u) {
  double e = 0.0;
  for (int k = 0; k < (g.dim == 3 ? g.nodes_per_axis() : 1); ++k)
    for (int j = 0; j < g.nodes_per_axis(); ++j)
      for (int i = 0; i < g.nodes_per_axis(); ++i)
        if (g.kind[g.index(i, j, k)] != NodeKind::Outside) e = std::max(e, std::abs(g.at(i, j, k) - u(g.position(i, j, k))));
  return e;
}

const ScalarField one = [](const Point&) { return 1.0; };
const ScalarField zero = [](const Point&) { return 0.0; };

}  // namespace

TEST_CASE("stencil is exact on linear and quadratic fields") {
  const ScalarField lin = [](const Point& x) { return x(0) + x(1); };
  auto g = solve_forward(DomainShape::UnitSquare, one, zero, lin, 1.0 / 16);
  CHECK(max_grid_error(g, lin) < 1e-10);
  const ScalarField quad = [](const Point& x) { return x(0) * x(0) + x(1) * x(1); };
  const ScalarField f = [](const Point&) { return -4.0; };
  auto q = solve_forward(DomainShape::UnitSquare, one, f, quad, 1.0 / 16);
  CHECK(max_grid_error(q, quad) < 1e-10);
  auto l = solve_forward(DomainShape::LShape, one, f, quad, 1.0 / 16);
  CHECK(max_grid_error(l, quad) < 1e-10);
  const ScalarField quad3 = [](const Point& x) { return x(0) * x(0) + x(1) * x(1) - 2 * x(2) * x(2) + x(0); };
  auto c = solve_forward(DomainShape::UnitCube, one, zero, quad3, 1.0 / 8);
  CHECK(max_grid_error(c, quad3) < 1e-10);
}

TEST_CASE("forward solver rejects bad inputs") {
  const ScalarField neg = [](const Point&) { return -1.0; };
  CHECK_THROWS_AS(solve_forward(DomainShape::UnitSquare, neg, zero, zero, 1.0 / 8), DataError);
  CHECK_THROWS_AS(solve_forward(DomainShape::UnitSquare, one, zero, zero, 0.3), ConfigurationError);
  CHECK_THROWS_AS(solve_forward(DomainShape::LShape, one, zero, zero, 1.0 / 7), ConfigurationError);
}

TEST_CASE("manufactured solution converges at second order") {
  auto p = make_problem("laplace_2d");
  std::vector<double> hs{1.0 / 16, 1.0 / 32, 1.0 / 64}, errs;
  for (double h : hs) errs.push_back(max_grid_error(solve_forward(p.shape, p.eps_exact, p.f, p.u_exact, h), p.u_exact));
  // least-squares slope of log err against log h
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    mx += std::log(hs[k]) / 3;
    my += std::log(errs[k]) / 3;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    sxy += (std::log(hs[k]) - mx) * (std::log(errs[k]) - my);
    sxx += (std::log(hs[k]) - mx) * (std::log(hs[k]) - mx);
  }
  const double order = sxy / sxx;
  MESSAGE("observed order " << order);
  CHECK(order >= 1.8);
  CHECK(order <= 2.2);
  CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("Neumann extraction examples") {
  const ScalarField lin = [](const Point& x) { return x(0); };
  auto g = solve_forward(DomainShape::UnitSquare, one, zero, lin, 1.0 / 16);
  NeumannExtractor ex(g);
  for (double t : {0.1, 0.37, 0.5, 0.93}) {
    CHECK(ex(make_point(1.0, t), 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ex(make_point(0.0, t), 3) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::abs(ex(make_point(t, 0.0), 0)) < 1e-9);
  }
  const ScalarField c = [](const Point&) { return 2.5; };
  auto k = solve_forward(DomainShape::LShape, one, zero, c, 1.0 / 16);
  auto disc = build_domain(DomainShape::LShape, 4, 4);
  for (double q : extract_neumann(k, disc.nodes)) CHECK(std::abs(q) < 1e-9);
}

TEST_CASE("extracted flux matches the analytic normal derivative") {
  auto p = make_problem("laplace_2d");
  auto g = solve_forward(p.shape, p.eps_exact, p.f, p.u_exact, 1.0 / 64);
  auto disc = build_domain(DomainShape::UnitSquare, 8, 20);
  auto q = extract_neumann(g, disc.nodes);
  double worst = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k)
    worst = std::max(worst, std::abs(q[k] - p.grad_u_exact(disc.nodes[k].position).dot(disc.nodes[k].normal)));
  MESSAGE("max flux error at h = 1/64: " << worst);
  CHECK(worst <= 5e-3);
}

TEST_CASE("discrete flux balance") {
  const ScalarField f = [](const Point& x) { return 1.0 + x(0) * x(1); };
  const ScalarField d = [](const Point& x) { return std::sin(3 * x(0)) * x(1); };
  for (auto shape : {DomainShape::UnitSquare, DomainShape::LShape}) {
    auto g = solve_forward(shape, one, f, d, 1.0 / 32);
    auto fb = flux_balance(g, one, f);
    CHECK(fb.imbalance < 1e-6);
    CHECK(std::abs(fb.source_integral) > 0.1);
  }
  auto c = solve_forward(DomainShape::UnitCube, one, f, zero, 1.0 / 8);
  CHECK(flux_balance(c, one, f).imbalance < 1e-6);
}

TEST_CASE("interpolation and gradient of grid solutions") {
  const ScalarField lin = [](const Point& x) { return 2 * x(0) - x(1) + 0.5; };
  auto g = solve_forward(DomainShape::LShape, one, zero, lin, 1.0 / 16);
  for (const Point& p : {make_point(0.25, 0.5), make_point(0.5, 0.75), make_point(0.3, 0.2), make_point(1.0, 1.0)}) {
    CHECK(g.interpolate(p) == doctest::Approx(lin(p)).epsilon(1e-9));
    const Vector gr = g.gradient(p);
    CHECK(gr(0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(gr(1) == doctest::Approx(-1.0).epsilon(1e-8));
  }
  CHECK_THROWS_AS(g.interpolate(make_point(0.25, 0.75)), GeometryError);
}

TEST_CASE("boundary CSV round-trips through ingestion") {
  auto p = make_problem("harmonic_x");
  auto data = prepare_data(p);
  auto disc = build_domain(DomainShape::UnitSquare, 10);
  for (auto& n : disc.nodes) {
    n.dirichlet = data.values.dirichlet(n);
    n.neumann = data.values.neumann(n);
  }
  const std::string path = "fdm_roundtrip.csv";
  write_boundary_csv(path, disc.nodes, 2);
  auto table = ingest_boundary_data(path, DomainShape::UnitSquare);
  CHECK(table.records.size() == 40);
  CHECK(table.duplicates == 0);
  std::remove(path.c_str());
}
