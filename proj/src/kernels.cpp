#include "bcid/kernels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;

[[noreturn]] void singular(const Point& x, const Point& y, const std::string& where = {}) {
  std::ostringstream os;
  os << "kernel singularity: |x - y| < " << kSingularityRadius << " at x = (" << x.transpose() << "), y = ("
     << y.transpose() << ")";
  if (!where.empty()) os << " [" << where << "]";
  throw SingularityError(os.str());
}

double green(const Point& x, const Point& y, int d) {
  const double r = (y - x).norm();
  if (r < kSingularityRadius) singular(x, y);
  return d == 2 ? -std::log(r) / kTwoPi : 1.0 / (kFourPi * r);
}

double green_dn(const Point& x, const Point& y, const Point& n, int d) {
  const Point diff = y - x;
  const double r2 = diff.squaredNorm();
  if (r2 < kSingularityRadius * kSingularityRadius) singular(x, y);
  const double proj = diff.dot(n);
  return d == 2 ? -proj / (kTwoPi * r2) : -proj / (kFourPi * r2 * std::sqrt(r2));
}

void check_dim(int d) {
  if (d != 2 && d != 3) throw ConfigurationError("kernel dimension must be 2 or 3, got " + std::to_string(d));
}

template <class SourceAt, class Fn>
Matrix fill(Eigen::Index rows, Eigen::Index cols, SourceAt&& source_name, Fn&& fn) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      try {
        m(i, j) = fn(i, j);
      } catch (const SingularityError& e) {
        throw SingularityError(std::string(e.what()) + " in " + source_name() + "[" + std::to_string(i) + ", " +
                               std::to_string(j) + "]");
      }
    }
  }
  return m;
}

}  // namespace

double fundamental_solution(const Point& x, const Point& y, int d) {
  check_dim(d);
  return green(x, y, d);
}

double normal_derivative(const Point& x, const Point& y, const Point& n_y, int d) {
  check_dim(d);
  return green_dn(x, y, n_y, d);
}

void precompute_interior_rows(KernelMatrices& k, const CollocationSet& c, int d) {
  check_dim(d);
  const auto ni = static_cast<Eigen::Index>(c.interior_sources.size());
  const auto mb = static_cast<Eigen::Index>(c.boundary_nodes.size());
  const auto mi = static_cast<Eigen::Index>(c.interior_nodes.size());
  k.g_ib = fill(ni, mb, [] { return std::string("g_ib"); },
                [&](auto i, auto j) { return green(c.interior_sources[i], c.boundary_nodes[j].position, d); });
  k.dgdn_ib = fill(ni, mb, [] { return std::string("dgdn_ib"); }, [&](auto i, auto j) {
    return green_dn(c.interior_sources[i], c.boundary_nodes[j].position, c.boundary_nodes[j].normal, d);
  });
  k.g_ii = fill(ni, mi, [] { return std::string("g_ii"); },
                [&](auto i, auto j) { return green(c.interior_sources[i], c.interior_nodes[j].position, d); });
}

KernelMatrices precompute(const CollocationSet& c, int d) {
  check_dim(d);
  KernelMatrices k;
  const auto nb = static_cast<Eigen::Index>(c.boundary_sources.size());
  const auto nd = static_cast<Eigen::Index>(c.check_points.size());
  const auto mb = static_cast<Eigen::Index>(c.boundary_nodes.size());
  const auto mi = static_cast<Eigen::Index>(c.interior_nodes.size());

  auto boundary_rows = [&](const std::vector<BoundaryNode>& src, const char* name, Matrix& g, Matrix& dg,
                           Matrix& gi) {
    const auto n = static_cast<Eigen::Index>(src.size());
    const std::string tag(name);
    g = fill(n, mb, [&] { return "g_" + tag + "b"; },
             [&](auto i, auto j) { return green(src[i].position, c.boundary_nodes[j].position, d); });
    dg = fill(n, mb, [&] { return "dgdn_" + tag + "b"; }, [&](auto i, auto j) {
      return green_dn(src[i].position, c.boundary_nodes[j].position, c.boundary_nodes[j].normal, d);
    });
    gi = fill(n, mi, [&] { return "g_" + tag + "i"; },
              [&](auto i, auto j) { return green(src[i].position, c.interior_nodes[j].position, d); });
  };
  boundary_rows(c.boundary_sources, "b", k.g_bb, k.dgdn_bb, k.g_bi);
  if (nd > 0) boundary_rows(c.check_points, "c", k.g_cb, k.dgdn_cb, k.g_ci);
  (void)nb;
  precompute_interior_rows(k, c, d);
  return k;
}

}  // namespace bcid
