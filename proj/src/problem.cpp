#include "bcid/problem.hpp"

#include <cmath>
#include <numbers>

#include "bcid/boundary_data.hpp"
#include "bcid/errors.hpp"

namespace bcid {

namespace {

constexpr double kPi = std::numbers::pi;

ProblemSpec laplace_2d() {
  ProblemSpec p;
  p.name = "laplace_2d";
  p.shape = DomainShape::UnitSquare;
  const double a = kPi * kPi / 2.0;
  p.eps_exact = [a](const Point& x) { return std::exp(a * (x(0) - x(0) * x(0))) / kPi; };
  p.u_exact = [a](const Point& x) { return std::exp(a * (x(0) * x(0) - x(0))) * std::sin(kPi * x(1)); };
  p.grad_u_exact = [a](const Point& x) {
    const double e = std::exp(a * (x(0) * x(0) - x(0)));
    Vector g(2);
    g << a * (2 * x(0) - 1) * e * std::sin(kPi * x(1)), kPi * e * std::cos(kPi * x(1));
    return g;
  };
  p.f = [](const Point&) { return 0.0; };
  p.dirichlet = p.u_exact;
  const double c = std::pow(kPi, 4) / 4.0;
  auto u = p.u_exact;
  p.g_exact = [c, u](const Point& x) { return -c * (2 * x(0) - 1) * (2 * x(0) - 1) * u(x); };
  return p;
}

ProblemSpec harmonic(std::string name, ScalarField u, VectorField grad) {
  ProblemSpec p;
  p.name = std::move(name);
  p.shape = DomainShape::UnitSquare;
  p.u_exact = u;
  p.grad_u_exact = std::move(grad);
  p.dirichlet = std::move(u);
  p.eps_exact = [](const Point&) { return 1.0; };
  p.f = [](const Point&) { return 0.0; };
  p.g_exact = [](const Point&) { return 0.0; };
  return p;
}

ProblemSpec piecewise_2d() {
  ProblemSpec p;
  p.name = "piecewise_2d";
  p.shape = DomainShape::LShape;
  p.source = DataSource::FromFDM;
  p.fdm_h = 1.0 / 64.0;
  p.eps_exact = [](const Point& x) { return x(1) < 0.5 ? 10.0 : 5.0; };
  p.f = [](const Point&) { return 1.0; };
  // u = 1 on the open bottom edge, 0 on the rest of the boundary
  p.dirichlet = [](const Point& x) { return (std::abs(x(1)) < 1e-12 && x(0) > 1e-12 && x(0) < 1.0 - 1e-12) ? 1.0 : 0.0; };
  p.g_exact = [](const Point& x) { return x(1) < 0.5 ? 0.1 : 0.2; };
  // 1 - 2 theta / pi at each bottom corner is harmonic and carries the jump
  // in the boundary values; the corner itself is given the side-edge value.
  auto theta = [](double y, double x) { return (std::abs(x) < 1e-14 && std::abs(y) < 1e-14) ? kPi / 2 : std::atan2(y, x); };
  p.singular = [theta](const Point& x) { return 1.0 - (2 / kPi) * (theta(x(1), x(0)) + theta(x(1), 1.0 - x(0))); };
  p.grad_singular = [](const Point& x) {
    const double ra = x(0) * x(0) + x(1) * x(1);
    const double xb = 1.0 - x(0), rb = xb * xb + x(1) * x(1);
    Vector g = Vector::Zero(2);
    if (ra < 1e-28 || rb < 1e-28) return g;
    g(0) = (2 / kPi) * (x(1) / ra - x(1) / rb);
    g(1) = -(2 / kPi) * (x(0) / ra + xb / rb);
    return g;
  };
  p.regions = {{"lower", [](const Point& x) { return x(1) < 0.5; }, 10.0},
               {"upper", [](const Point& x) { return x(1) >= 0.5; }, 5.0}};
  return p;
}

ProblemSpec cube_3d() {
  ProblemSpec p;
  p.name = "cube_3d";
  p.shape = DomainShape::UnitCube;
  p.source = DataSource::FromFDM;
  p.fdm_h = 1.0 / 32.0;
  p.eps_exact = [](const Point& x) { return std::sin(x(0)) + std::cos(x(1)) + x(2); };
  // div(eps grad u) = 10
  p.f = [](const Point&) { return -10.0; };
  p.dirichlet = [](const Point&) { return 0.0; };
  p.eval_resolution = 21;
  return p;
}

}  // namespace

DataSource parse_data_source(std::string_view name) {
  if (name == "analytic") return DataSource::Analytic;
  if (name == "fdm") return DataSource::FromFDM;
  if (name == "file") return DataSource::FromFile;
  throw ConfigurationError("unknown boundary data source '" + std::string(name) + "' (analytic, fdm, file)");
}

std::string_view to_string(DataSource source) {
  switch (source) {
    case DataSource::Analytic: return "analytic";
    case DataSource::FromFDM: return "fdm";
    case DataSource::FromFile: return "file";
  }
  return "?";
}

std::vector<std::string> problem_names() {
  return {"laplace_2d", "piecewise_2d", "cube_3d", "harmonic_constant", "harmonic_x", "harmonic_saddle"};
}

ProblemSpec make_problem(std::string_view name) {
  if (name == "laplace_2d") return laplace_2d();
  if (name == "piecewise_2d") return piecewise_2d();
  if (name == "cube_3d") return cube_3d();
  if (name == "harmonic_constant")
    return harmonic("harmonic_constant", [](const Point&) { return 1.0; }, [](const Point&) { return Vector(Vector::Zero(2)); });
  if (name == "harmonic_x")
    return harmonic("harmonic_x", [](const Point& x) { return x(0); }, [](const Point&) { return Vector(Vector::Unit(2, 0)); });
  if (name == "harmonic_saddle")
    return harmonic(
        "harmonic_saddle", [](const Point& x) { return x(0) * x(0) - x(1) * x(1); },
        [](const Point& x) {
          Vector g(2);
          g << 2 * x(0), -2 * x(1);
          return g;
        });
  throw ConfigurationError("unknown problem '" + std::string(name) + "'");
}

PreparedData prepare_data(const ProblemSpec& p) {
  PreparedData out;
  switch (p.source) {
    case DataSource::Analytic: {
      if (!p.u_exact || !p.grad_u_exact) throw DataError("analytic boundary data needs u and grad u");
      auto u = p.u_exact;
      auto gu = p.grad_u_exact;
      out.values.dirichlet = [u](const BoundaryNode& n) { return std::optional<double>(u(n.position)); };
      out.values.neumann = [gu](const BoundaryNode& n) { return std::optional<double>(gu(n.position).dot(n.normal)); };
      break;
    }
    case DataSource::FromFDM: {
      if (!p.eps_exact) throw DataError("forward-solver data needs the true medium");
      auto grid = std::make_shared<Grid>(solve_forward(p.shape, p.eps_exact, p.f, p.dirichlet, p.fdm_h));
      out.grid = grid;
      // fluxes of the smooth remainder are differenced on u - s
      auto smooth = grid;
      if (p.singular) {
        auto v = std::make_shared<Grid>(*grid);
        const int n = v->nodes_per_axis(), nk = v->dim == 3 ? n : 1;
        for (int k = 0; k < nk; ++k)
          for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
              const auto idx = v->index(i, j, k);
              if (v->kind[idx] != NodeKind::Outside) v->values[idx] -= p.singular(v->position(i, j, k));
            }
        smooth = v;
      }
      auto ex = std::make_shared<NeumannExtractor>(*smooth);
      auto dir = p.dirichlet;
      auto sing = p.singular;
      out.values.dirichlet = [dir, sing](const BoundaryNode& n) {
        return std::optional<double>(dir(n.position) - (sing ? sing(n.position) : 0.0));
      };
      out.values.neumann = [ex, smooth](const BoundaryNode& n) { return std::optional<double>((*ex)(n.position, n.segment_id)); };
      break;
    }
    case DataSource::FromFile: {
      auto table = ingest_boundary_data(p.data_file, p.shape);
      out.duplicate_rows = table.duplicates;
      out.values = bind_table(table, p.shape);
      break;
    }
  }
  if (p.singular && p.source != DataSource::FromFDM) {
    auto base = out.values;
    auto s = p.singular;
    auto gs = p.grad_singular;
    out.values.dirichlet = [base, s](const BoundaryNode& n) -> std::optional<double> {
      auto v = base.dirichlet ? base.dirichlet(n) : std::nullopt;
      if (v) *v -= s(n.position);
      return v;
    };
    out.values.neumann = [base, gs](const BoundaryNode& n) -> std::optional<double> {
      auto v = base.neumann ? base.neumann(n) : std::nullopt;
      if (v) *v -= gs(n.position).dot(n.normal);
      return v;
    };
  }
  out.singular = p.singular;
  out.grad_singular = p.grad_singular;
  if (p.u_exact) {
    out.u_reference = p.u_exact;
  } else if (out.grid) {
    auto grid = out.grid;
    out.u_reference = [grid](const Point& x) { return grid->interpolate(x); };
  }
  if (p.g_exact) {
    out.g_reference = p.g_exact;
  } else if (out.grid && p.eps_exact && p.f) {
    // g = (f + grad eps . grad u) / eps with grad u from the grid
    auto grid = out.grid;
    auto eps = p.eps_exact;
    auto f = p.f;
    out.g_reference = [grid, eps, f](const Point& x) {
      const double h = 1e-6;
      Vector ge(x.size());
      for (Eigen::Index a = 0; a < x.size(); ++a) {
        Point xp = x, xm = x;
        xp(a) += h;
        xm(a) -= h;
        ge(a) = (eps(xp) - eps(xm)) / (2 * h);
      }
      return (f(x) + ge.dot(grid->gradient(x))) / eps(x);
    };
  }
  return out;
}

Matrix evaluation_points(DomainShape shape, int resolution) {
  if (resolution < 2) throw ConfigurationError("evaluation resolution must be >= 2");
  const Domain domain(shape);
  const int d = domain.dim();
  std::vector<Point> pts;
  const int nk = d == 3 ? resolution : 1;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) {
        const double s = 1.0 / (resolution - 1);
        const Point p = d == 2 ? make_point(i * s, j * s) : make_point(i * s, j * s, k * s);
        if (domain.contains(p) || domain.on_boundary(p, 1e-12)) pts.push_back(p);
      }
  return positions_of(pts);
}

Vector solution_values(const PreparedData& data, const Vector& generator_values, const Matrix& points) {
  Vector u = generator_values;
  if (data.singular)
    for (Eigen::Index j = 0; j < points.cols(); ++j) u(j) += data.singular(points.col(j));
  return u;
}

double relative_l2(const Vector& estimate, const Vector& reference) {
  if (estimate.size() != reference.size()) throw ContractViolation("relative_l2: size mismatch");
  const double den = reference.norm();
  const double num = (estimate - reference).norm();
  if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return num / den;
}

}  // namespace bcid
