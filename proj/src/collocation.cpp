#include "bcid/collocation.hpp"

#include <sstream>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

void bind(BoundaryNode& node, const BoundaryValues& data, bool need_neumann) {
  if (data.dirichlet) node.dirichlet = data.dirichlet(node);
  if (need_neumann && data.neumann) node.neumann = data.neumann(node);
}

void validate(const CollocationConfig& cfg) {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigurationError(std::string("[collocation] ") + name + ": must be >= 1");
  };
  positive(cfg.sources_per_edge, "sources_per_edge");
  positive(cfg.gauss_order, "gauss_order");
  positive(cfg.panels_per_edge, "panels_per_edge");
  positive(cfg.interior_sources, "interior_sources");
  positive(cfg.interior_nodes, "interior_nodes");
  if (cfg.check_points_per_edge < 0) throw ConfigurationError("[collocation] check_points_per_edge: must be >= 0");
  if (cfg.source_margin < 0.0 || cfg.source_margin >= 0.25)
    throw ConfigurationError("[collocation] source_margin: must lie in [0, 0.25)");
}

// Seeds for the three random streams are derived from the run seed.
constexpr std::uint64_t kSourceStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kNodeStream = 0xC2B2AE3D27D4EB4FULL;

}  // namespace

Matrix positions_of(const std::vector<Point>& points) {
  if (points.empty()) return {};
  Matrix m(points.front().size(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t k = 0; k < points.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = points[k];
  return m;
}

Matrix CollocationSet::interior_node_positions() const {
  Matrix m(dim, static_cast<Eigen::Index>(interior_nodes.size()));
  for (std::size_t k = 0; k < interior_nodes.size(); ++k)
    m.col(static_cast<Eigen::Index>(k)) = interior_nodes[k].position;
  return m;
}

Vector CollocationSet::interior_node_weights() const {
  Vector w(static_cast<Eigen::Index>(interior_nodes.size()));
  for (std::size_t k = 0; k < interior_nodes.size(); ++k) w(static_cast<Eigen::Index>(k)) = interior_nodes[k].weight;
  return w;
}

Matrix CollocationSet::interior_source_positions() const {
  Matrix m(dim, static_cast<Eigen::Index>(interior_sources.size()));
  for (std::size_t k = 0; k < interior_sources.size(); ++k)
    m.col(static_cast<Eigen::Index>(k)) = interior_sources[k];
  return m;
}

Matrix CollocationSet::check_point_positions() const {
  Matrix m(dim, static_cast<Eigen::Index>(check_points.size()));
  for (std::size_t k = 0; k < check_points.size(); ++k)
    m.col(static_cast<Eigen::Index>(k)) = check_points[k].position;
  return m;
}

Vector CollocationSet::check_point_values() const {
  Vector v(static_cast<Eigen::Index>(check_points.size()));
  for (std::size_t k = 0; k < check_points.size(); ++k) {
    if (!check_points[k].dirichlet)
      throw DataError("check point " + std::to_string(k) + " has no Dirichlet value");
    v(static_cast<Eigen::Index>(k)) = *check_points[k].dirichlet;
  }
  return v;
}

void resample_interior_sources(CollocationSet& colloc, const CollocationConfig& cfg, std::uint64_t seed) {
  SamplingOptions opts{cfg.source_sampler, cfg.source_margin};
  auto nodes = sample_interior(colloc.shape, cfg.interior_sources, seed ^ kSourceStream, opts);
  colloc.interior_sources.clear();
  colloc.interior_sources.reserve(nodes.size());
  for (auto& n : nodes) colloc.interior_sources.push_back(std::move(n.position));
}

CollocationSet build_collocation(DomainShape shape, const CollocationConfig& cfg, const BoundaryValues& data) {
  validate(cfg);
  CollocationSet c;
  c.shape = shape;
  c.dim = dimension(shape);
  const Domain domain(shape);

  for (auto& p : boundary_sources(domain, cfg.sources_per_edge)) {
    const auto ids = domain.segments_at(p);
    if (ids.empty()) throw GeometryError("boundary source off the boundary");
    const Segment& seg = domain.segments()[static_cast<std::size_t>(ids.front())];
    BoundaryNode node{p, seg.normal, 0.0, seg.id, {}, {}};
    node.weight = seg.measure;  // nominal, unused by the residuals
    bind(node, data, false);
    c.boundary_sources.push_back(std::move(node));
  }
  c.corner_coefficients.resize(static_cast<Eigen::Index>(c.boundary_sources.size()));
  for (std::size_t i = 0; i < c.boundary_sources.size(); ++i)
    c.corner_coefficients(static_cast<Eigen::Index>(i)) = corner_coefficient(c.boundary_sources[i].position, domain);

  auto disc = build_domain(shape, cfg.gauss_order, cfg.panels_per_edge);
  c.boundary_nodes = std::move(disc.nodes);
  for (auto& node : c.boundary_nodes) bind(node, data, true);

  resample_interior_sources(c, cfg, cfg.seed);
  c.interior_nodes = sample_interior(shape, cfg.interior_nodes, cfg.seed ^ kNodeStream, {cfg.node_sampler, 0.0});

  if (cfg.check_points_per_edge > 0) {
    c.check_points = boundary_check_points(domain, cfg.check_points_per_edge);
    for (auto& node : c.check_points) bind(node, data, false);
    for (std::size_t k = 0; k < c.check_points.size(); ++k) {
      for (std::size_t i = 0; i < c.boundary_sources.size(); ++i) {
        if ((c.check_points[k].position - c.boundary_sources[i].position).norm() < 1e-9) {
          std::ostringstream os;
          os << "check point " << k << " coincides with boundary source " << i;
          throw ConfigurationError(os.str());
        }
      }
    }
  }
  return c;
}

}  // namespace bcid
