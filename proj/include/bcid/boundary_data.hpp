#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bcid/collocation.hpp"
#include "bcid/geometry.hpp"

namespace bcid {

struct BoundaryRecord {
  Point position;
  double u = 0.0;
  double q = 0.0;
  int segment = 0;
  std::size_t row = 0;
};

struct BoundaryTable {
  int dim = 2;
  std::vector<BoundaryRecord> records;
  /// Rows whose coordinates repeated an earlier row; the later row wins.
  std::size_t duplicates = 0;
};

/// Reads a `x,y[,z],u,q,segment` CSV. Throws IngestionError (with the data row,
/// 0 for the header) on a missing column, a non-finite entry, a point off its
/// segment, or a coverage gap wider than one node spacing.
BoundaryTable ingest_boundary_data(const std::string& path, DomainShape shape);
BoundaryTable parse_boundary_data(const std::string& text, DomainShape shape);

/// Maps table values onto arbitrary boundary nodes: linear in the edge
/// parameter between the two nearest records (2D), nearest record (3D).
BoundaryValues bind_table(const BoundaryTable& table, DomainShape shape);

}  // namespace bcid
