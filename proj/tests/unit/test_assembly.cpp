#include <cmath>

#include "bcid/assembly.hpp"
#include "bcid/errors.hpp"
#include "bcid/problem.hpp"
#include "doctest.h"

using namespace bcid;

namespace {

struct Setup {
  ProblemSpec problem;
  CollocationSet colloc;
  KernelMatrices kernels;
  BoundaryTerms terms;
};

Setup setup(const std::string& name, CollocationConfig cfg = {}) {
  Setup s;
  s.problem = make_problem(name);
  auto data = prepare_data(s.problem);
  s.colloc = build_collocation(s.problem.shape, cfg, data.values);
  s.kernels = precompute(s.colloc, s.problem.dim());
  s.terms = boundary_terms(s.colloc, s.kernels);
  return s;
}

// Network whose output is the constant b.
NetworkParams constant_net(double b, int dim = 2) {
  auto n = zero_network(dim);
  n.b_out(0, 0) = b;
  return n;
}

}  // namespace

TEST_CASE("loss1 and loss2 contracts") {
  CHECK(loss1(Vector::Zero(4)) == 0.0);
  CHECK(loss1(Vector::Constant(10, 2.0)) == 4.0);
  CHECK(loss1(Vector::Constant(1, -3.0)) == 9.0);
  CHECK(loss2(Vector::Zero(4)) == 0.0);
  CHECK(loss2(Vector::Constant(10, 2.0)) == 4.0);
  CHECK(loss2(Vector::Constant(1, -3.0)) == 9.0);
  Vector r(3);
  r << 0.5, -1.0, 2.0;
  CHECK(loss1(3.0 * r) == doctest::Approx(9.0 * loss1(r)).epsilon(1e-15));
}

TEST_CASE("loss3 contracts") {
  std::vector<BoundaryNode> pts;
  for (int k = 0; k < 5; ++k) pts.push_back({make_point(0.2 * k + 0.1, 0.0), make_point(0, -1), 0.2, 0, 1.0, {}});
  CHECK(loss3(zero_network(2), pts) == 1.0);
  CHECK(loss3(constant_net(1.0), pts) == 0.0);
  CHECK(loss3(constant_net(1.1), pts) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(loss3(zero_network(2), {}), ConfigurationError);
}

TEST_CASE("constant field gives vanishing boundary terms") {
  auto s = setup("harmonic_constant");
  CHECK(s.terms.values.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("zero boundary data gives zero terms and residuals") {
  CollocationConfig cfg;
  BoundaryValues zero{[](const BoundaryNode&) { return std::optional<double>(0.0); },
                      [](const BoundaryNode&) { return std::optional<double>(0.0); }};
  auto c = build_collocation(DomainShape::UnitSquare, cfg, zero);
  auto k = precompute(c, 2);
  auto t = boundary_terms(c, k);
  CHECK(t.values.isZero(0.0));
  auto zero_net = zero_network(2);
  CHECK(residual_r2(c, k, t, zero_net, zero_net).isZero(0.0));
}

TEST_CASE("missing Neumann data names the node") {
  CollocationConfig cfg;
  BoundaryValues partial{[](const BoundaryNode&) { return std::optional<double>(1.0); }, {}};
  auto c = build_collocation(DomainShape::UnitSquare, cfg, partial);
  auto k = precompute(c, 2);
  try {
    boundary_terms(c, k);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("boundary node 0") != std::string::npos);
  }
}

TEST_CASE("Green identity regression for harmonic functions") {
  for (const char* name : {"harmonic_constant", "harmonic_x", "harmonic_saddle"}) {
    CAPTURE(name);
    auto s = setup(name);
    const Vector r1 = residual_r1(s.terms, s.kernels, s.colloc, zero_network(2));
    CHECK(r1.cwiseAbs().maxCoeff() <= 1e-3);
    // reconstruction u(p) = -(interior data term) at interior probes
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Point p = make_point(0.05 + 0.9 * ((k * 7) % 20) / 19.0, 0.05 + 0.9 * k / 19.0);
      double h = 0.0;
      for (const auto& n : s.colloc.boundary_nodes)
        h += (*n.dirichlet * normal_derivative(p, n.position, n.normal, 2) -
              fundamental_solution(p, n.position, 2) * *n.neumann) * n.weight;
      worst = std::max(worst, std::abs(-h - s.problem.u_exact(p)));
    }
    CHECK(worst <= 2e-3);
  }
}

TEST_CASE("R1 equals F when the approximator vanishes") {
  auto s = setup("laplace_2d");
  const Vector r1 = residual_r1(s.terms, s.kernels, s.colloc, zero_network(2));
  CHECK((r1 - s.terms.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("R2 for u = x with vanishing networks") {
  auto s = setup("harmonic_x");
  const Vector r2 = residual_r2(s.colloc, s.kernels, s.terms, zero_network(2), zero_network(2));
  for (std::size_t j = 0; j < s.colloc.interior_sources.size(); ++j)
    CHECK(std::abs(r2(static_cast<Eigen::Index>(j)) + s.colloc.interior_sources[j](0)) < 2e-3);
}

TEST_CASE("R1 is affine in the approximator output") {
  auto s = setup("laplace_2d");
  const auto h1 = init_network(1), h2 = init_network(2);
  const Vector g1 = forward(h1, s.colloc.interior_node_positions());
  const Vector g2 = forward(h2, s.colloc.interior_node_positions());
  const Vector w = s.colloc.interior_node_weights();
  const double a = 0.7, b = -1.3;
  const Vector combined = s.terms.values - s.kernels.g_bi * (a * g1 + b * g2).cwiseProduct(w);
  const Vector r1a = residual_r1(s.terms, s.kernels, s.colloc, h1);
  const Vector r1b = residual_r1(s.terms, s.kernels, s.colloc, h2);
  const Vector affine = a * r1a + b * r1b + (1 - a - b) * s.terms.values;
  CHECK((combined - affine).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("laplace data with the exact equivalent source") {
  auto s = setup("laplace_2d");
  Vector gq(static_cast<Eigen::Index>(s.colloc.interior_nodes.size()));
  for (std::size_t k = 0; k < s.colloc.interior_nodes.size(); ++k)
    gq(static_cast<Eigen::Index>(k)) = s.problem.g_exact(s.colloc.interior_nodes[k].position);
  const Vector r1 = s.terms.values - s.kernels.g_bi * gq.cwiseProduct(s.colloc.interior_node_weights());
  MESSAGE("max |R1| at exact g: " << r1.cwiseAbs().maxCoeff());
  CHECK(r1.cwiseAbs().maxCoeff() <= 5e-2);
  Vector up(static_cast<Eigen::Index>(s.colloc.interior_sources.size()));
  for (std::size_t k = 0; k < s.colloc.interior_sources.size(); ++k)
    up(static_cast<Eigen::Index>(k)) = s.problem.u_exact(s.colloc.interior_sources[k]);
  const Vector r2 = up + s.terms.interior - s.kernels.g_ii * gq.cwiseProduct(s.colloc.interior_node_weights());
  MESSAGE("max |R2| at exact g, u: " << r2.cwiseAbs().maxCoeff());
  CHECK(r2.cwiseAbs().maxCoeff() <= 5e-2);
}

TEST_CASE("assembler matches the free functions and its tape versions") {
  auto s = setup("laplace_2d");
  Assembler as(s.colloc, s.kernels);
  const auto a = init_network(3), b = init_network(4);
  const Vector r1 = residual_r1(s.terms, s.kernels, s.colloc, a);
  CHECK((as.r1(a) - r1).cwiseAbs().maxCoeff() < 1e-12);
  const Vector r2 = residual_r2(s.colloc, s.kernels, s.terms, a, b);
  CHECK((as.r2(a, b) - r2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(as.mismatch(b).squaredNorm() / as.supervision_count() ==
        doctest::Approx(loss3(b, s.colloc.check_points)).epsilon(1e-12));

  Tape tape;
  auto av = constant_vars(tape, a);
  auto bv = constant_vars(tape, b);
  CHECK((tape.value(as.r1(tape, av)).transpose() - r1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((tape.value(as.r2(tape, a, bv)).transpose() - r2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((tape.value(as.r1_check(tape, av)).transpose() - as.r1_check(a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resampling interior sources refreshes kernel rows") {
  auto s = setup("harmonic_x");
  Assembler as(s.colloc, s.kernels);
  CollocationConfig cfg;
  CollocationSet c2 = s.colloc;
  resample_interior_sources(c2, cfg, 1234);
  as.set_interior_sources(c2.interior_sources);
  const Vector r2 = as.r2(zero_network(2), zero_network(2));
  for (std::size_t j = 0; j < c2.interior_sources.size(); ++j)
    CHECK(std::abs(r2(static_cast<Eigen::Index>(j)) + c2.interior_sources[j](0)) < 2e-3);
}
