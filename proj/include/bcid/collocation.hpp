#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bcid/geometry.hpp"
#include "bcid/types.hpp"

namespace bcid {

struct CollocationConfig {
  int sources_per_edge = 10;
  int gauss_order = 8;
  int panels_per_edge = 20;
  int interior_sources = 100;
  int interior_nodes = 100;
  int check_points_per_edge = 5;
  /// Minimum distance of interior source points from the boundary.
  double source_margin = 0.02;
  SamplerKind source_sampler = SamplerKind::Halton;
  SamplerKind node_sampler = SamplerKind::Lattice;
  std::uint64_t seed = 0;
};

/// Boundary data lookup; an empty optional means the value is not available.
struct BoundaryValues {
  std::function<std::optional<double>(const BoundaryNode&)> dirichlet;
  std::function<std::optional<double>(const BoundaryNode&)> neumann;
};

/// An interior measurement (used only when interior supervision is enabled).
struct Observation {
  Point position;
  double value = 0.0;
};

/// Source points, integration nodes and held-out check points for one run.
struct CollocationSet {
  DomainShape shape = DomainShape::UnitSquare;
  int dim = 2;
  std::vector<BoundaryNode> boundary_sources;  ///< P_i, carrying u-bar(P_i)
  Vector corner_coefficients;                  ///< c(P_i)
  std::vector<BoundaryNode> boundary_nodes;    ///< Q with weights, u-bar and q-bar
  std::vector<Point> interior_sources;         ///< p_j
  std::vector<DomainNode> interior_nodes;      ///< q with weights
  std::vector<BoundaryNode> check_points;      ///< held out, u-bar only
  std::vector<Observation> interior_observations;

  Matrix interior_node_positions() const;  ///< d x M_i
  Vector interior_node_weights() const;
  Matrix interior_source_positions() const;  ///< d x N_i
  Matrix check_point_positions() const;      ///< d x N_d
  Vector check_point_values() const;
};

CollocationSet build_collocation(DomainShape shape, const CollocationConfig& cfg, const BoundaryValues& data);

/// Draws a fresh set of interior source points in place.
void resample_interior_sources(CollocationSet& colloc, const CollocationConfig& cfg, std::uint64_t seed);

Matrix positions_of(const std::vector<Point>& points);

}  // namespace bcid
