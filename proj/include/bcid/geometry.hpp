#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "bcid/types.hpp"

namespace bcid {

enum class DomainShape { UnitSquare, LShape, UnitCube };

DomainShape parse_shape(std::string_view name);
std::string_view to_string(DomainShape shape);
int dimension(DomainShape shape);

/// A straight edge (2D) or an axis-aligned rectangular face (3D).
///
/// Points are origin + sum_k t_k * spans[k] with t in [0,1]^(d-1); the
/// parameterization is oriented so that `normal` points out of the domain.
struct Segment {
  int id = 0;
  Point origin;
  std::vector<Point> spans;
  Point normal;
  double measure = 0.0;

  Point at(double t) const;
  Point at(double t, double s) const;
  /// Local coordinates of a point lying on the segment's supporting line/plane.
  Vector parameters(const Point& p) const;
  double distance(const Point& p) const;
};

struct BoundaryNode {
  Point position;
  Point normal;
  double weight = 0.0;
  int segment_id = 0;
  std::optional<double> dirichlet;
  std::optional<double> neumann;
};

struct DomainNode {
  Point position;
  double weight = 0.0;
};

/// Immutable description of one of the supported computational domains.
class Domain {
 public:
  explicit Domain(DomainShape shape);

  DomainShape shape() const { return shape_; }
  int dim() const { return dim_; }
  const std::vector<Segment>& segments() const { return segments_; }

  double measure() const;
  double boundary_measure() const;
  Point centroid() const;
  Point lower() const;
  Point upper() const;

  /// Open interior. For the L-shape the removed quadrant is closed, so the
  /// re-entrant edges are never counted as interior.
  bool contains(const Point& p) const;
  bool on_boundary(const Point& p, double tol = 1e-9) const;
  double distance_to_boundary(const Point& p) const;
  /// Ids of all segments within tol of p.
  std::vector<int> segments_at(const Point& p, double tol = 1e-9) const;

 private:
  DomainShape shape_;
  int dim_;
  std::vector<Segment> segments_;
};

struct BoundaryDiscretization {
  Domain domain;
  std::vector<BoundaryNode> nodes;
  std::vector<Segment> segments;
};

/// Composite Gauss-Legendre nodes on every edge (2D) or face (3D).
///
/// Each unit edge is cut into `panels_per_edge` panels carrying
/// `nodes_per_edge` abscissae each (a face gets panels^2 patches of
/// nodes_per_edge^2 tensor nodes). Shorter L-shape edges get panels in
/// proportion to their length. Weights carry edge length / face area.
BoundaryDiscretization build_domain(DomainShape shape, int nodes_per_edge, int panels_per_edge = 1);

/// Uniform: pseudo-random. Halton: randomly shifted Halton sequence.
/// Lattice: cell centres of a k^d grid with k = round((count/measure)^(1/d)),
/// so the node count is only approximately `count` and the seed is unused.
enum class SamplerKind { Uniform, Halton, Lattice };

SamplerKind parse_sampler(std::string_view name);
std::string_view to_string(SamplerKind kind);

struct SamplingOptions {
  SamplerKind sampler = SamplerKind::Halton;
  /// Minimum distance from the boundary.
  double margin = 0.0;
};

/// `count` interior points with equal weights measure(Omega)/count.
/// Deterministic for a fixed seed.
std::vector<DomainNode> sample_interior(DomainShape shape, int count, std::uint64_t seed,
                                        const SamplingOptions& options = {});

/// Jump coefficient of the boundary identity: 1 inside, 1/2 on smooth boundary
/// points, interior angle / 2pi at 2D corners and solid angle / 4pi on cube
/// edges and vertices.
double corner_coefficient(const Point& p, const Domain& domain, double tol = 1e-9);

/// Staggered boundary source points: `per_edge` points per unit edge at
/// element midpoints (k + 1/2)/m; in 3D an m x m grid of cell centres per face.
std::vector<Point> boundary_sources(const Domain& domain, int per_edge);

/// Held-out boundary points at (k + 0.382)/m, never coinciding with sources.
std::vector<BoundaryNode> boundary_check_points(const Domain& domain, int per_edge);

}  // namespace bcid
