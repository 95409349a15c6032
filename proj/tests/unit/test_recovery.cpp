#include <cmath>
#include <random>

#include "bcid/errors.hpp"
#include "bcid/recovery.hpp"
#include "doctest.h"

using namespace bcid;

namespace {

std::vector<DomainNode> lattice(DomainShape shape, int count) {
  return sample_interior(shape, count, 0, {SamplerKind::Lattice, 0.0});
}

std::vector<Anchor> boundary_anchors(DomainShape shape, const ScalarField& eps) {
  std::vector<Anchor> out;
  for (const Point& p : boundary_sources(Domain(shape), 10)) out.push_back({p, eps(p)});
  return out;
}

double l2_against(const MediumField& m, const ScalarField& eps) {
  const Matrix e = evaluation_points(DomainShape::UnitSquare, 41);
  Vector ref(e.cols());
  for (Eigen::Index j = 0; j < e.cols(); ++j) ref(j) = eps(e.col(j));
  return relative_l2(m.evaluate(e), ref);
}

// Manufactured pair: f = -eps lap u - grad eps . grad u, g = -lap u.
struct Pair {
  ScalarField eps;
  VectorField grad_eps;
  VectorField grad_u;
  ScalarField lap_u;
};

RecoveryInputs inputs_for(const Pair& p, const std::vector<DomainNode>& nodes) {
  auto f = [p](const Point& x) { return -p.eps(x) * p.lap_u(x) - p.grad_eps(x).dot(p.grad_u(x)); };
  auto g = [p](const Point& x) { return -p.lap_u(x); };
  return recovery_inputs(nodes, g, p.grad_u, f);
}

}  // namespace

TEST_CASE("weighted median") {
  CHECK(weighted_median({3, 1, 2}, {1, 1, 1}) == 2);
  CHECK(weighted_median({1, 2, 3}, {1, 0, 5}) == 3);
  CHECK(weighted_median({5}, {0.1}) == 5);
  CHECK_THROWS_AS(weighted_median({}, {}), ContractViolation);
  CHECK_THROWS_AS(weighted_median({1, 2}, {1}), ContractViolation);
}

TEST_CASE("piecewise: single region with constant g recovers f/g exactly") {
  auto nodes = lattice(DomainShape::UnitSquare, 100);
  auto in = recovery_inputs(nodes, [](const Point&) { return 0.2; }, {}, [](const Point&) { return 1.0; });
  auto r = recover_piecewise(in, {{"all", [](const Point&) { return true; }, 0.0}});
  REQUIRE(r.field.regions.size() == 1);
  CHECK(r.field.regions[0].true_value == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(r.field(make_point(0.3, 0.3)) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(r.warnings.empty());
}

TEST_CASE("piecewise: L-shape layers with exact g") {
  const auto problem = make_problem("piecewise_2d");
  auto nodes = lattice(problem.shape, 100);
  auto in = recovery_inputs(nodes, problem.g_exact, {}, problem.f);
  auto r = recover_piecewise(in, problem.regions);
  REQUIRE(r.field.regions.size() == 2);
  CHECK(r.field.regions[0].true_value == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(r.field.regions[1].true_value == doctest::Approx(5.0).epsilon(1e-12));
  const Matrix e = evaluation_points(problem.shape, 41);
  Vector ref(e.cols());
  for (Eigen::Index j = 0; j < e.cols(); ++j) ref(j) = problem.eps_exact(e.col(j));
  CHECK(relative_l2(r.field.evaluate(e), ref) <= 0.15);
}

TEST_CASE("piecewise: 1% multiplicative noise stays within 2%") {
  auto nodes = lattice(DomainShape::UnitSquare, 100);
  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise(0.0, 0.01);
  int within = 0;
  for (int draw = 0; draw < 100; ++draw) {
    auto in = recovery_inputs(nodes, [](const Point&) { return 0.2; }, {}, [](const Point&) { return 1.0; });
    for (Eigen::Index j = 0; j < in.g.size(); ++j) in.g(j) *= 1.0 + noise(rng);
    auto r = recover_piecewise(in, {{"all", [](const Point&) { return true; }, 0.0}});
    within += std::abs(r.field.regions[0].true_value - 5.0) <= 0.02 * 5.0;
  }
  CHECK(within == 100);
}

TEST_CASE("piecewise: scaling f and g together leaves eps unchanged") {
  const auto problem = make_problem("piecewise_2d");
  auto nodes = lattice(problem.shape, 100);
  auto base = recovery_inputs(nodes, [](const Point& x) { return 0.1 + 0.05 * x(0); }, {}, problem.f);
  const auto r0 = recover_piecewise(base, problem.regions);
  for (double s : {0.5, 3.0, 1e3}) {
    auto in = base;
    in.g *= s;
    in.f *= s;
    const auto r = recover_piecewise(in, problem.regions);
    for (std::size_t k = 0; k < r.field.regions.size(); ++k)
      CHECK(r.field.regions[k].true_value == doctest::Approx(r0.field.regions[k].true_value).epsilon(1e-12));
  }
}

TEST_CASE("piecewise errors") {
  auto nodes = lattice(DomainShape::UnitSquare, 100);
  auto in = recovery_inputs(nodes, [](const Point&) { return 0.2; }, {}, [](const Point&) { return 1.0; });
  // a sliver holding fewer than 5 lattice nodes
  CHECK_THROWS_AS(recover_piecewise(in, {{"sliver", [](const Point& x) { return x(0) < 0.1 && x(1) < 0.3; }, 0.0}}),
                  ConfigurationError);
  auto flat = recovery_inputs(nodes, [](const Point&) { return 0.0; }, {}, [](const Point&) { return 1.0; });
  CHECK_THROWS_AS(recover_piecewise(flat, {{"all", [](const Point&) { return true; }, 0.0}}), NumericError);
  CHECK_THROWS_AS(recover_piecewise(in, {}), ConfigurationError);
  auto neg = recovery_inputs(nodes, [](const Point&) { return -0.2; }, {}, [](const Point&) { return 1.0; });
  CHECK(recover_piecewise(neg, {{"all", [](const Point&) { return true; }, 0.0}}).warnings.size() == 1);
}

TEST_CASE("smooth recovery needs an anchor") {
  auto nodes = lattice(DomainShape::UnitSquare, 25);
  auto in = recovery_inputs(nodes, [](const Point&) { return 0.0; },
                            [](const Point&) { return Vector(Vector::Unit(2, 0)); }, [](const Point&) { return 0.0; });
  CHECK_THROWS_AS(recover_smooth(in, {}, RecoveryConfig{}), ConfigurationError);
  RecoveryConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(recover_smooth(in, {{make_point(0, 0), 1.0}}, bad), ConfigurationError);
}

TEST_CASE("smooth recovery: constant medium pinned by the anchor") {
  // g = 0, f = 0: every constant solves the transport equation
  auto nodes = lattice(DomainShape::UnitSquare, 100);
  auto in = recovery_inputs(nodes, [](const Point&) { return 0.0; },
                            [](const Point& x) { return Vector(make_point(2 * x(0), -2 * x(1))); },
                            [](const Point&) { return 0.0; });
  RecoveryConfig cfg;
  cfg.epochs = 1500;
  auto r = recover_smooth(in, {{make_point(0.5, 0.0), 2.5}}, cfg);
  const Matrix e = evaluation_points(DomainShape::UnitSquare, 21);
  const Vector v = r.field.evaluate(e);
  MESSAGE("constant medium spread " << (v.array() - 2.5).abs().maxCoeff());
  CHECK((v.array() - 2.5).abs().maxCoeff() <= 1e-3);
  CHECK(r.warnings.empty());
}

TEST_CASE("smooth recovery: exponential medium along a linear solution") {
  // u = x, eps = exp(a x), f = 0 gives g = a; the fitted log-slope recovers a
  const double a = 0.7;
  auto nodes = lattice(DomainShape::UnitSquare, 100);
  auto in = recovery_inputs(nodes, [a](const Point&) { return a; },
                            [](const Point&) { return Vector(Vector::Unit(2, 0)); }, [](const Point&) { return 0.0; });
  std::vector<Anchor> inflow;
  for (int k = 0; k < 10; ++k) inflow.push_back({make_point(0.0, (k + 0.5) / 10.0), 1.0});
  RecoveryConfig cfg;
  cfg.epochs = 2000;
  auto r = recover_smooth(in, inflow, cfg);
  double slope = 0;
  for (int k = 0; k < 10; ++k) {
    const double y = (k + 0.5) / 10.0;
    slope += (std::log(r.field(make_point(0.9, y))) - std::log(r.field(make_point(0.1, y)))) / 0.8;
  }
  slope /= 10;
  MESSAGE("fitted exponent " << slope);
  CHECK(std::abs(slope - a) <= 0.05 * a);
}

TEST_CASE("smooth recovery of the Laplace benchmark medium from exact fields") {
  const auto problem = make_problem("laplace_2d");
  auto nodes = lattice(problem.shape, 400);
  auto in = recovery_inputs(nodes, problem.g_exact, problem.grad_u_exact, problem.f);
  RecoveryConfig cfg;
  cfg.seed = 1;
  auto r = recover_smooth(in, boundary_anchors(problem.shape, problem.eps_exact), cfg);
  const double err = l2_against(r.field, problem.eps_exact);
  MESSAGE("laplace medium l2 " << err);
  CHECK(err <= 0.05);
}

TEST_CASE("consistency loop over manufactured pairs") {
  auto nodes = lattice(DomainShape::UnitSquare, 225);
  std::vector<Pair> pairs{
      {[](const Point& x) { return 1.0 + 0.5 * x(0); }, [](const Point&) { return Vector(make_point(0.5, 0.0)); },
       [](const Point& x) { return Vector(make_point(2 * x(0), 1.0)); }, [](const Point&) { return 2.0; }},
      {[](const Point& x) { return std::exp(0.3 * x(1)); },
       [](const Point& x) { return Vector(make_point(0.0, 0.3 * std::exp(0.3 * x(1)))); },
       [](const Point& x) { return Vector(make_point(1.0, 2 * x(1))); }, [](const Point&) { return 2.0; }},
      {[](const Point& x) { return 2.0 + x(0) * x(1); }, [](const Point& x) { return Vector(make_point(x(1), x(0))); },
       [](const Point& x) { return Vector(make_point(1.0 + x(1), 1.0 + x(0))); }, [](const Point&) { return 0.0; }},
  };
  int idx = 0;
  for (const auto& p : pairs) {
    RecoveryConfig cfg;
    cfg.epochs = 2000;
    auto r = recover_smooth(inputs_for(p, nodes), boundary_anchors(DomainShape::UnitSquare, p.eps), cfg);
    const double err = l2_against(r.field, p.eps);
    MESSAGE("pair " << idx << " l2 " << err << " final loss " << r.loss_history.back());
    CHECK(err <= 0.02);
    ++idx;
  }
}

TEST_CASE("positivity warning") {
  auto nodes = lattice(DomainShape::UnitSquare, 25);
  auto in = recovery_inputs(nodes, [](const Point&) { return 0.0; },
                            [](const Point&) { return Vector(Vector::Unit(2, 0)); }, [](const Point&) { return 0.0; });
  RecoveryConfig cfg;
  cfg.epochs = 200;
  auto r = recover_smooth(in, {{make_point(0.0, 0.5), -1.0}}, cfg);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("default anchor sits where the gradient is largest") {
  auto net = zero_network(2);
  net.w_out.setZero();
  // u = b only: zero gradient everywhere, first node wins
  const auto bd = build_domain(DomainShape::UnitSquare, 4, 1);
  CHECK(default_anchor_position(bd.nodes, net) == bd.nodes.front().position);
  CHECK_THROWS_AS(default_anchor_position({}, net), ConfigurationError);
}
