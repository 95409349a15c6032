#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcid/geometry.hpp"
#include "bcid/types.hpp"

namespace bcid {

enum class NodeKind : std::uint8_t { Outside = 0, Interior = 1, Boundary = 2 };

/// Node values on a uniform lattice of spacing h over the bounding box of a
/// domain. Index (i, j[, k]) sits at (i h, j h[, k h]).
struct Grid {
  DomainShape shape = DomainShape::UnitSquare;
  int dim = 2;
  double h = 0.0;
  int cells = 0;  ///< per axis
  std::vector<double> values;
  std::vector<NodeKind> kind;
  int iterations = 0;         ///< solver iterations (0 for a direct solve)
  double residual = 0.0;      ///< relative residual of the linear solve

  int nodes_per_axis() const { return cells + 1; }
  std::size_t index(int i, int j, int k = 0) const;
  Point position(int i, int j, int k = 0) const;
  double at(int i, int j, int k = 0) const { return values[index(i, j, k)]; }

  /// Multilinear interpolation; p must lie in the closed domain.
  double interpolate(const Point& p) const;
  /// Central differences of the interpolant (one-sided next to the boundary).
  Vector gradient(const Point& p) const;
};

struct FdmOptions {
  double tolerance = 1e-10;  ///< relative residual
};

/// Solves -div(eps grad u) = f with Dirichlet data using the flux-conservative
/// 5-point (2D) or 7-point (3D) stencil. The face coefficient is the harmonic
/// mean of eps sampled at the centres of the two half-cells sharing the face.
Grid solve_forward(DomainShape shape, const ScalarField& eps, const ScalarField& f, const ScalarField& dirichlet,
                   double h, const FdmOptions& options = {});

/// Outward normal derivative of the grid solution, evaluated at boundary grid
/// nodes with a one-sided four-point difference along the normal and
/// interpolated to arbitrary boundary points with local cubic Lagrange
/// interpolation along each edge (tensor cubic on faces).
class NeumannExtractor {
 public:
  explicit NeumannExtractor(const Grid& grid);
  double operator()(const Point& p, int segment_id) const;
  /// Flux at the boundary grid node nearest to p on the segment.
  double at_grid_node(const Point& p, int segment_id) const;

 private:
  const Grid* grid_;
  Domain domain_;
};

/// q-bar at every node of a boundary node list.
std::vector<double> extract_neumann(const Grid& grid, const std::vector<BoundaryNode>& nodes);

struct FluxBalance {
  double boundary_flux = 0.0;    ///< discrete sum of eps du/dn over the boundary faces
  double source_integral = 0.0;  ///< discrete integral of f over the interior nodes
  double imbalance = 0.0;        ///< |boundary_flux + source_integral|
};

/// Discrete divergence theorem for a solved grid: the boundary flux through
/// the faces joining interior to boundary nodes balances the source.
FluxBalance flux_balance(const Grid& grid, const ScalarField& eps, const ScalarField& f);

/// Writes `x,y[,z],u,q,segment` rows for the given boundary nodes.
void write_boundary_csv(const std::string& path, const std::vector<BoundaryNode>& nodes, int dim);

}  // namespace bcid
