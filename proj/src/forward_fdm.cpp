#include "bcid/forward_fdm.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bcid/errors.hpp"
#include "bcid/network.hpp"

namespace bcid {

namespace {

using Sparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

int cells_for(DomainShape shape, double h) {
  if (!(h > 0.0)) throw ConfigurationError("grid spacing must be positive");
  const double n = 1.0 / h;
  const long cells = std::lround(n);
  if (std::abs(n - static_cast<double>(cells)) > 1e-9 || cells < 2)
    throw ConfigurationError("grid spacing must divide the unit interval");
  if (shape == DomainShape::LShape && cells % 2 != 0)
    throw ConfigurationError("grid spacing must divide the L-shape edges (even cell count)");
  return static_cast<int>(cells);
}

double checked_eps(const ScalarField& eps, const Point& p) {
  const double e = eps(p);
  if (!(e > 0.0) || !std::isfinite(e)) {
    std::ostringstream os;
    os << "diffusion coefficient must be positive, got " << e << " at (" << p.transpose() << ")";
    throw DataError(os.str());
  }
  return e;
}

// Harmonic mean over the two half-cells between a node and its neighbour.
double face_coefficient(const ScalarField& eps, const Point& p, const Point& q) {
  const double a = checked_eps(eps, p + 0.25 * (q - p));
  const double b = checked_eps(eps, p + 0.75 * (q - p));
  return 2.0 * a * b / (a + b);
}

}  // namespace

std::size_t Grid::index(int i, int j, int k) const {
  const auto n = static_cast<std::size_t>(nodes_per_axis());
  return static_cast<std::size_t>(i) + n * (static_cast<std::size_t>(j) + n * static_cast<std::size_t>(k));
}

Point Grid::position(int i, int j, int k) const {
  return dim == 2 ? make_point(i * h, j * h) : make_point(i * h, j * h, k * h);
}

namespace {

// Candidate lower cell indices along one axis for coordinate x.
std::array<int, 2> cell_candidates(double x, double h, int cells, int& count) {
  const double s = x / h;
  int base = static_cast<int>(std::floor(s));
  base = std::clamp(base, 0, cells - 1);
  count = 1;
  std::array<int, 2> out{base, base};
  if (std::abs(s - std::round(s)) < 1e-9) {
    const int r = static_cast<int>(std::round(s));
    out = {std::clamp(r, 0, cells - 1), std::clamp(r - 1, 0, cells - 1)};
    count = out[0] == out[1] ? 1 : 2;
  }
  return out;
}

template <class Fn>
void for_each_cell_candidate(const Grid& g, const Point& p, Fn&& fn) {
  std::array<std::array<int, 2>, 3> cand{};
  std::array<int, 3> cnt{1, 1, 1};
  for (int a = 0; a < g.dim; ++a) cand[static_cast<std::size_t>(a)] = cell_candidates(p(a), g.h, g.cells, cnt[static_cast<std::size_t>(a)]);
  for (int ia = 0; ia < cnt[0]; ++ia)
    for (int ja = 0; ja < cnt[1]; ++ja)
      for (int ka = 0; ka < cnt[2]; ++ka)
        if (fn(cand[0][static_cast<std::size_t>(ia)], cand[1][static_cast<std::size_t>(ja)],
               g.dim == 3 ? cand[2][static_cast<std::size_t>(ka)] : 0))
          return;
  std::ostringstream os;
  os << "point (" << p.transpose() << ") is outside the grid domain";
  throw GeometryError(os.str());
}

template <class Value>
auto multilinear(const Grid& g, const Point& p, Value&& value) {
  using R = decltype(value(0, 0, 0));
  R result{};
  for_each_cell_candidate(g, p, [&](int i, int j, int k) {
    const int kmax = g.dim == 3 ? 1 : 0;
    for (int dk = 0; dk <= kmax; ++dk)
      for (int dj = 0; dj <= 1; ++dj)
        for (int di = 0; di <= 1; ++di)
          if (g.kind[g.index(i + di, j + dj, k + dk)] == NodeKind::Outside) return false;
    const double tx = p(0) / g.h - i, ty = p(1) / g.h - j, tz = g.dim == 3 ? p(2) / g.h - k : 0.0;
    bool first = true;
    for (int dk = 0; dk <= kmax; ++dk)
      for (int dj = 0; dj <= 1; ++dj)
        for (int di = 0; di <= 1; ++di) {
          double w = (di ? tx : 1 - tx) * (dj ? ty : 1 - ty);
          if (g.dim == 3) w *= dk ? tz : 1 - tz;
          if (first) {
            result = w * value(i + di, j + dj, k + dk);
            first = false;
          } else {
            result += w * value(i + di, j + dj, k + dk);
          }
        }
    return true;
  });
  return result;
}

Vector nodal_gradient(const Grid& g, int i, int j, int k) {
  Vector grad(g.dim);
  const int n = g.cells;
  const std::array<int, 3> idx{i, j, k};
  for (int a = 0; a < g.dim; ++a) {
    auto val = [&](int off) -> std::optional<double> {
      std::array<int, 3> q = idx;
      q[static_cast<std::size_t>(a)] += off;
      if (q[static_cast<std::size_t>(a)] < 0 || q[static_cast<std::size_t>(a)] > n) return std::nullopt;
      const std::size_t id = g.index(q[0], q[1], q[2]);
      if (g.kind[id] == NodeKind::Outside) return std::nullopt;
      return g.values[id];
    };
    const double u0 = *val(0);
    auto up = val(1), dn = val(-1);
    if (up && dn) {
      grad(a) = (*up - *dn) / (2 * g.h);
    } else if (up) {
      grad(a) = (-3 * u0 + 4 * *up - val(2).value_or(2 * *up - u0)) / (2 * g.h);
    } else if (dn) {
      grad(a) = (3 * u0 - 4 * *dn + val(-2).value_or(2 * *dn - u0)) / (2 * g.h);
    } else {
      grad(a) = 0.0;
    }
  }
  return grad;
}

}  // namespace

double Grid::interpolate(const Point& p) const {
  return multilinear(*this, p, [&](int i, int j, int k) { return values[index(i, j, k)]; });
}

Vector Grid::gradient(const Point& p) const {
  return multilinear(*this, p, [&](int i, int j, int k) -> Vector { return nodal_gradient(*this, i, j, k); });
}

Grid solve_forward(DomainShape shape, const ScalarField& eps, const ScalarField& f, const ScalarField& dirichlet,
                   double h, const FdmOptions& options) {
  Grid g;
  g.shape = shape;
  g.dim = dimension(shape);
  g.cells = cells_for(shape, h);
  g.h = 1.0 / g.cells;
  const Domain domain(shape);
  const int n = g.nodes_per_axis();
  const int nk = g.dim == 3 ? n : 1;
  const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * static_cast<std::size_t>(nk);
  g.values.assign(total, 0.0);
  g.kind.assign(total, NodeKind::Outside);

  std::vector<int> unknown(total, -1);
  int count = 0;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t id = g.index(i, j, k);
        const Point p = g.position(i, j, k);
        if (domain.contains(p)) {
          g.kind[id] = NodeKind::Interior;
          unknown[id] = count++;
        } else if (domain.on_boundary(p, 1e-12)) {
          g.kind[id] = NodeKind::Boundary;
          g.values[id] = dirichlet(p);
        }
      }
  if (count == 0) throw ConfigurationError("grid has no interior nodes");

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(count) * static_cast<std::size_t>(2 * g.dim + 1));
  Vector rhs(count);
  const double cell = std::pow(g.h, g.dim - 2);  // face area / spacing
  const double volume = std::pow(g.h, g.dim);
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t id = g.index(i, j, k);
        if (g.kind[id] != NodeKind::Interior) continue;
        const int row = unknown[id];
        const Point p = g.position(i, j, k);
        double diag = 0.0;
        rhs(row) = f(p) * volume;
        for (int a = 0; a < g.dim; ++a) {
          for (int s : {-1, 1}) {
            std::array<int, 3> q{i, j, k};
            q[static_cast<std::size_t>(a)] += s;
            const std::size_t nb = g.index(q[0], q[1], q[2]);
            const double c = face_coefficient(eps, p, g.position(q[0], q[1], q[2])) * cell;
            diag += c;
            if (g.kind[nb] == NodeKind::Interior) {
              trip.emplace_back(row, unknown[nb], -c);
            } else {
              rhs(row) += c * g.values[nb];
            }
          }
        }
        trip.emplace_back(row, row, diag);
      }
  Sparse A(count, count);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::SimplicialLDLT<Sparse> ldlt(A);
  Vector x;
  const double bnorm = rhs.norm() > 0.0 ? rhs.norm() : 1.0;
  if (ldlt.info() == Eigen::Success) {
    x = ldlt.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      const Vector r = rhs - A * x;
      if (r.norm() / bnorm <= options.tolerance) break;
      x += ldlt.solve(r);
    }
  }
  double rel = x.size() == count ? (rhs - A * x).norm() / bnorm : INFINITY;
  if (!(rel <= options.tolerance)) {
    Eigen::ConjugateGradient<Sparse, Eigen::Lower | Eigen::Upper> cg(A);
    cg.setTolerance(options.tolerance * 0.1);
    cg.setMaxIterations(20 * count);
    const Vector guess = x.size() == count ? x : Vector::Zero(count);
    x = cg.solveWithGuess(rhs, guess);
    g.iterations = static_cast<int>(cg.iterations());
    rel = (rhs - A * x).norm() / bnorm;
  }
  g.residual = rel;
  if (!(rel <= options.tolerance)) {
    std::ostringstream os;
    os << "forward solve did not converge: relative residual " << rel;
    throw NumericError(os.str());
  }
  for (std::size_t id = 0; id < total; ++id)
    if (unknown[id] >= 0) g.values[id] = x(unknown[id]);
  return g;
}

NeumannExtractor::NeumannExtractor(const Grid& grid) : grid_(&grid), domain_(grid.shape) {}

double NeumannExtractor::at_grid_node(const Point& p, int segment_id) const {
  const Grid& g = *grid_;
  const Segment& seg = domain_.segments().at(static_cast<std::size_t>(segment_id));
  std::array<int, 3> base{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) base[static_cast<std::size_t>(a)] = static_cast<int>(std::lround(p(a) / g.h));
  std::array<int, 3> step{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) step[static_cast<std::size_t>(a)] = -static_cast<int>(std::lround(seg.normal(a)));
  std::array<double, 4> u{};
  for (int s = 0; s < 4; ++s) {
    std::array<int, 3> q{};
    for (int a = 0; a < 3; ++a) q[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + s * step[static_cast<std::size_t>(a)];
    for (int a = 0; a < g.dim; ++a)
      if (q[static_cast<std::size_t>(a)] < 0 || q[static_cast<std::size_t>(a)] > g.cells)
        throw GeometryError("normal stencil leaves the grid");
    const std::size_t id = g.index(q[0], q[1], g.dim == 3 ? q[2] : 0);
    if (g.kind[id] == NodeKind::Outside) throw GeometryError("normal stencil leaves the domain");
    u[static_cast<std::size_t>(s)] = g.values[id];
  }
  return (11.0 * u[0] - 18.0 * u[1] + 9.0 * u[2] - 2.0 * u[3]) / (6.0 * g.h);
}

namespace {

// Four consecutive lattice indices in [0, last] around parameter s (in cells),
// and the cubic Lagrange weights at s.
std::pair<int, std::array<double, 4>> cubic_stencil(double s, int last) {
  int start = static_cast<int>(std::floor(s)) - 1;
  start = std::clamp(start, 0, std::max(0, last - 3));
  std::array<double, 4> w{};
  for (int a = 0; a < 4; ++a) {
    double l = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) l *= (s - (start + b)) / static_cast<double>(a - b);
    w[static_cast<std::size_t>(a)] = l;
  }
  return {start, w};
}

}  // namespace

double NeumannExtractor::operator()(const Point& p, int segment_id) const {
  const Grid& g = *grid_;
  const Segment& seg = domain_.segments().at(static_cast<std::size_t>(segment_id));
  const Vector t = seg.parameters(p);
  if (g.dim == 2) {
    const int m = static_cast<int>(std::lround(seg.measure / g.h));
    auto [start, w] = cubic_stencil(t(0) * m, m);
    double q = 0.0;
    for (int a = 0; a < 4; ++a) q += w[static_cast<std::size_t>(a)] * at_grid_node(seg.at(double(start + a) / m), segment_id);
    return q;
  }
  const int m0 = static_cast<int>(std::lround(seg.spans[0].norm() / g.h));
  const int m1 = static_cast<int>(std::lround(seg.spans[1].norm() / g.h));
  auto [s0, w0] = cubic_stencil(t(0) * m0, m0);
  auto [s1, w1] = cubic_stencil(t(1) * m1, m1);
  double q = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      q += w0[static_cast<std::size_t>(a)] * w1[static_cast<std::size_t>(b)] *
           at_grid_node(seg.at(double(s0 + a) / m0, double(s1 + b) / m1), segment_id);
  return q;
}

std::vector<double> extract_neumann(const Grid& grid, const std::vector<BoundaryNode>& nodes) {
  NeumannExtractor ex(grid);
  std::vector<double> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(ex(n.position, n.segment_id));
  return out;
}

FluxBalance flux_balance(const Grid& g, const ScalarField& eps, const ScalarField& f) {
  FluxBalance fb;
  const int n = g.nodes_per_axis();
  const int nk = g.dim == 3 ? n : 1;
  const double cell = std::pow(g.h, g.dim - 2);
  const double volume = std::pow(g.h, g.dim);
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t id = g.index(i, j, k);
        if (g.kind[id] != NodeKind::Interior) continue;
        const Point p = g.position(i, j, k);
        fb.source_integral += f(p) * volume;
        for (int a = 0; a < g.dim; ++a)
          for (int s : {-1, 1}) {
            std::array<int, 3> q{i, j, k};
            q[static_cast<std::size_t>(a)] += s;
            const std::size_t nb = g.index(q[0], q[1], q[2]);
            if (g.kind[nb] != NodeKind::Boundary) continue;
            const double c = face_coefficient(eps, p, g.position(q[0], q[1], q[2])) * cell;
            fb.boundary_flux += c * (g.values[nb] - g.values[id]);
          }
      }
  fb.imbalance = std::abs(fb.boundary_flux + fb.source_integral);
  return fb;
}

void write_boundary_csv(const std::string& path, const std::vector<BoundaryNode>& nodes, int dim) {
  std::ofstream os(path);
  if (!os) throw ConfigurationError("cannot write " + path);
  os << (dim == 3 ? "x,y,z,u,q,segment\n" : "x,y,u,q,segment\n");
  for (const auto& nd : nodes) {
    for (int a = 0; a < dim; ++a) os << format_double(nd.position(a)) << ',';
    os << (nd.dirichlet ? format_double(*nd.dirichlet) : "nan") << ','
       << (nd.neumann ? format_double(*nd.neumann) : "nan") << ',' << nd.segment_id << '\n';
  }
}

}  // namespace bcid
