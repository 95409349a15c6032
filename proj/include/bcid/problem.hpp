#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcid/collocation.hpp"
#include "bcid/forward_fdm.hpp"
#include "bcid/geometry.hpp"

namespace bcid {

enum class DataSource { Analytic, FromFDM, FromFile };

DataSource parse_data_source(std::string_view name);
std::string_view to_string(DataSource source);

/// A subdomain on which the medium is constant.
struct Region {
  std::string name;
  std::function<bool(const Point&)> contains;
  double true_value = 0.0;  ///< 0 when unknown
};

/// Inverse problem -div(eps grad u) = f in the domain with boundary data.
/// Empty std::function members mean "not known".
struct ProblemSpec {
  std::string name;
  DomainShape shape = DomainShape::UnitSquare;
  ScalarField f;
  ScalarField dirichlet;  ///< prescribed boundary values
  ScalarField u_exact;
  VectorField grad_u_exact;
  ScalarField eps_exact;
  ScalarField g_exact;  ///< equivalent source (f + grad eps . grad u) / eps
  DataSource source = DataSource::Analytic;
  double fdm_h = 1.0 / 64.0;
  std::string data_file;
  std::vector<Region> regions;  ///< non-empty for piecewise media
  /// Known harmonic function carrying the corner singularities of
  /// discontinuous Dirichlet data. When set, the networks see u - s; being
  /// harmonic, s leaves the equivalent source unchanged.
  ScalarField singular;
  VectorField grad_singular;
  int eval_resolution = 51;

  int dim() const { return dimension(shape); }
  bool piecewise() const { return !regions.empty(); }
};

/// Presets: laplace_2d, piecewise_2d, cube_3d, harmonic_constant, harmonic_x,
/// harmonic_saddle.
ProblemSpec make_problem(std::string_view name);
std::vector<std::string> problem_names();

/// Boundary values for collocation plus the reference fields used by metrics.
struct PreparedData {
  BoundaryValues values;
  std::shared_ptr<const Grid> grid;  ///< set when data came from the forward solver
  std::size_t duplicate_rows = 0;
  ScalarField u_reference;
  ScalarField g_reference;
  /// Copied from the problem; add back to the generator output to get u.
  ScalarField singular;
  VectorField grad_singular;
};

/// u = generator output + singular part, at the columns of `points`.
Vector solution_values(const PreparedData& data, const Vector& generator_values, const Matrix& points);

PreparedData prepare_data(const ProblemSpec& problem);

/// Lattice with `resolution` points per axis over the closed domain.
Matrix evaluation_points(DomainShape shape, int resolution);

/// Relative discrete L2 error ||a - b|| / ||b||; 0 when both vanish.
double relative_l2(const Vector& estimate, const Vector& reference);

}  // namespace bcid
