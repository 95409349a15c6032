#include "bcid/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "bcid/errors.hpp"
#include "bcid/quadrature.hpp"

namespace bcid {

namespace {

Segment make_edge(int id, Point a, Point b) {
  Segment seg;
  seg.id = id;
  const Point d = b - a;
  seg.measure = d.norm();
  seg.origin = std::move(a);
  seg.spans = {d};
  seg.normal = make_point(d(1), -d(0)) / seg.measure;  // counter-clockwise traversal
  return seg;
}

Segment make_face(int id, Point origin, Point s1, Point s2) {
  Segment seg;
  seg.id = id;
  Eigen::Vector3d a = s1;
  Eigen::Vector3d b = s2;
  Eigen::Vector3d n = a.cross(b);
  seg.measure = n.norm();
  seg.normal = n / seg.measure;
  seg.origin = std::move(origin);
  seg.spans = {std::move(s1), std::move(s2)};
  return seg;
}

std::vector<Segment> polygon_edges(const std::vector<Point>& vertices) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    out.push_back(make_edge(static_cast<int>(i), vertices[i], vertices[(i + 1) % vertices.size()]));
  }
  return out;
}

int panels_for(double length, int per_unit) {
  return std::max(1, static_cast<int>(std::lround(per_unit * length)));
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

// Irrational offset so held-out points never land on (k + 1/2)/n source positions.
constexpr double kCheckOffset = 0.3819660112501051;

double unit_real(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

DomainShape parse_shape(std::string_view name) {
  if (name == "unit_square" || name == "UnitSquare") return DomainShape::UnitSquare;
  if (name == "l_shape" || name == "LShape") return DomainShape::LShape;
  if (name == "unit_cube" || name == "UnitCube") return DomainShape::UnitCube;
  throw ConfigurationError("unsupported domain shape '" + std::string(name) + "'");
}

std::string_view to_string(DomainShape shape) {
  switch (shape) {
    case DomainShape::UnitSquare:
      return "unit_square";
    case DomainShape::LShape:
      return "l_shape";
    case DomainShape::UnitCube:
      return "unit_cube";
  }
  return "unknown";
}

int dimension(DomainShape shape) { return shape == DomainShape::UnitCube ? 3 : 2; }

Point Segment::at(double t) const { return origin + t * spans.at(0); }

Point Segment::at(double t, double s) const { return origin + t * spans.at(0) + s * spans.at(1); }

Vector Segment::parameters(const Point& p) const {
  Vector t(spans.size());
  for (std::size_t k = 0; k < spans.size(); ++k) {
    t(k) = (p - origin).dot(spans[k]) / spans[k].squaredNorm();
  }
  return t;
}

double Segment::distance(const Point& p) const {
  Vector t = parameters(p).cwiseMax(0.0).cwiseMin(1.0);
  Point q = origin;
  for (std::size_t k = 0; k < spans.size(); ++k) q += t(k) * spans[k];
  return (p - q).norm();
}

Domain::Domain(DomainShape shape) : shape_(shape), dim_(dimension(shape)) {
  switch (shape) {
    case DomainShape::UnitSquare:
      segments_ = polygon_edges({make_point(0, 0), make_point(1, 0), make_point(1, 1), make_point(0, 1)});
      break;
    case DomainShape::LShape:
      segments_ = polygon_edges({make_point(0, 0), make_point(1, 0), make_point(1, 1), make_point(0.5, 1),
                                 make_point(0.5, 0.5), make_point(0, 0.5)});
      break;
    case DomainShape::UnitCube:
      segments_ = {
          make_face(0, make_point(0, 0, 0), make_point(0, 0, 1), make_point(0, 1, 0)),
          make_face(1, make_point(1, 0, 0), make_point(0, 1, 0), make_point(0, 0, 1)),
          make_face(2, make_point(0, 0, 0), make_point(1, 0, 0), make_point(0, 0, 1)),
          make_face(3, make_point(0, 1, 0), make_point(0, 0, 1), make_point(1, 0, 0)),
          make_face(4, make_point(0, 0, 0), make_point(0, 1, 0), make_point(1, 0, 0)),
          make_face(5, make_point(0, 0, 1), make_point(1, 0, 0), make_point(0, 1, 0)),
      };
      break;
  }
}

double Domain::measure() const { return shape_ == DomainShape::LShape ? 0.75 : 1.0; }

double Domain::boundary_measure() const {
  double total = 0.0;
  for (const auto& s : segments_) total += s.measure;
  return total;
}

Point Domain::centroid() const {
  switch (shape_) {
    case DomainShape::UnitSquare:
      return make_point(0.5, 0.5);
    case DomainShape::LShape:
      // bottom strip (area 1/2) plus top-right quadrant (area 1/4)
      return make_point((0.5 * 0.5 + 0.25 * 0.75) / 0.75, (0.5 * 0.25 + 0.25 * 0.75) / 0.75);
    case DomainShape::UnitCube:
      return make_point(0.5, 0.5, 0.5);
  }
  return {};
}

Point Domain::lower() const { return Point::Zero(dim_); }

Point Domain::upper() const { return Point::Ones(dim_); }

bool Domain::contains(const Point& p) const {
  if (p.size() != dim_) return false;
  for (int k = 0; k < dim_; ++k) {
    if (!(p(k) > 0.0 && p(k) < 1.0)) return false;
  }
  if (shape_ == DomainShape::LShape && p(0) <= 0.5 && p(1) >= 0.5) return false;
  return true;
}

double Domain::distance_to_boundary(const Point& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : segments_) best = std::min(best, s.distance(p));
  return best;
}

bool Domain::on_boundary(const Point& p, double tol) const {
  return p.size() == dim_ && distance_to_boundary(p) <= tol;
}

std::vector<int> Domain::segments_at(const Point& p, double tol) const {
  std::vector<int> ids;
  if (p.size() != dim_) return ids;
  for (const auto& s : segments_) {
    if (s.distance(p) <= tol) ids.push_back(s.id);
  }
  return ids;
}

BoundaryDiscretization build_domain(DomainShape shape, int nodes_per_edge, int panels_per_edge) {
  if (nodes_per_edge < 2) {
    throw ConfigurationError("build_domain: nodes_per_edge must be >= 2, got " + std::to_string(nodes_per_edge));
  }
  if (panels_per_edge < 1) {
    throw ConfigurationError("build_domain: panels_per_edge must be >= 1");
  }
  BoundaryDiscretization out{Domain(shape), {}, {}};
  out.segments = out.domain.segments();
  const QuadratureRule rule = gauss_legendre(nodes_per_edge);
  const int dim = out.domain.dim();

  for (const auto& seg : out.segments) {
    if (dim == 2) {
      const int panels = panels_for(seg.measure, panels_per_edge);
      for (int p = 0; p < panels; ++p) {
        for (std::size_t k = 0; k < rule.size(); ++k) {
          const double t = (p + 0.5 * (rule.nodes[k] + 1.0)) / panels;
          out.nodes.push_back({seg.at(t), seg.normal, 0.5 * rule.weights[k] * seg.measure / panels, seg.id, {}, {}});
        }
      }
    } else {
      const int panels = panels_for(seg.spans[0].norm(), panels_per_edge);
      const double patch = seg.measure / (panels * panels);
      for (int pi = 0; pi < panels; ++pi) {
        for (int pj = 0; pj < panels; ++pj) {
          for (std::size_t a = 0; a < rule.size(); ++a) {
            for (std::size_t b = 0; b < rule.size(); ++b) {
              const double t = (pi + 0.5 * (rule.nodes[a] + 1.0)) / panels;
              const double s = (pj + 0.5 * (rule.nodes[b] + 1.0)) / panels;
              const double w = 0.25 * rule.weights[a] * rule.weights[b] * patch;
              out.nodes.push_back({seg.at(t, s), seg.normal, w, seg.id, {}, {}});
            }
          }
        }
      }
    }
  }
  return out;
}

SamplerKind parse_sampler(std::string_view name) {
  if (name == "uniform") return SamplerKind::Uniform;
  if (name == "halton") return SamplerKind::Halton;
  if (name == "lattice") return SamplerKind::Lattice;
  throw ConfigurationError("unknown sampler '" + std::string(name) + "' (expected uniform, halton or lattice)");
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::Halton: return "halton";
    case SamplerKind::Lattice: return "lattice";
  }
  return "?";
}

namespace {

std::vector<DomainNode> lattice_nodes(const Domain& domain, int count, double margin) {
  const int dim = domain.dim();
  const int k = std::max(1, static_cast<int>(std::lround(std::pow(count / domain.measure(), 1.0 / dim))));
  std::vector<Point> pts;
  const int nz = dim == 3 ? k : 1;
  for (int c = 0; c < nz; ++c)
    for (int b = 0; b < k; ++b)
      for (int a = 0; a < k; ++a) {
        Point p = dim == 2 ? make_point((a + 0.5) / k, (b + 0.5) / k) : make_point((a + 0.5) / k, (b + 0.5) / k, (c + 0.5) / k);
        if (!domain.contains(p)) continue;
        if (margin > 0.0 && domain.distance_to_boundary(p) < margin) continue;
        pts.push_back(std::move(p));
      }
  if (pts.empty()) throw ConfigurationError("lattice sampler produced no interior points");
  std::vector<DomainNode> nodes;
  const double weight = domain.measure() / static_cast<double>(pts.size());
  for (auto& p : pts) nodes.push_back({std::move(p), weight});
  return nodes;
}

}  // namespace

std::vector<DomainNode> sample_interior(DomainShape shape, int count, std::uint64_t seed,
                                        const SamplingOptions& options) {
  if (count < 1) throw ConfigurationError("sample_interior: count must be >= 1");
  const Domain domain(shape);
  const int dim = domain.dim();
  if (options.sampler == SamplerKind::Lattice) return lattice_nodes(domain, count, options.margin);
  std::mt19937_64 rng(seed);
  static constexpr std::array<std::uint64_t, 3> kBases{2, 3, 5};
  std::array<double, 3> shift{};
  for (int k = 0; k < dim; ++k) shift[k] = unit_real(rng);

  const double weight = domain.measure() / count;
  std::vector<DomainNode> nodes;
  nodes.reserve(count);
  std::uint64_t index = 0;
  while (static_cast<int>(nodes.size()) < count) {
    Point p(dim);
    if (options.sampler == SamplerKind::Halton) {
      ++index;
      for (int k = 0; k < dim; ++k) {
        const double v = radical_inverse(index, kBases[k]) + shift[k];
        p(k) = v - std::floor(v);
      }
    } else {
      for (int k = 0; k < dim; ++k) p(k) = unit_real(rng);
    }
    if (!domain.contains(p)) continue;
    if (options.margin > 0.0 && domain.distance_to_boundary(p) < options.margin) continue;
    nodes.push_back({std::move(p), weight});
  }
  return nodes;
}

double corner_coefficient(const Point& p, const Domain& domain, double tol) {
  if (domain.contains(p) && domain.distance_to_boundary(p) > tol) return 1.0;
  const auto ids = domain.segments_at(p, tol);
  if (ids.empty()) throw GeometryError("corner_coefficient: point is neither inside nor on the boundary");

  if (domain.dim() == 3) {
    // faces of the cube meet at right angles
    switch (ids.size()) {
      case 1:
        return 0.5;
      case 2:
        return 0.25;
      default:
        return 0.125;
    }
  }
  if (ids.size() == 1) {
    const Segment& s = domain.segments()[ids[0]];
    const double t = s.parameters(p)(0);
    const double end_tol = tol / s.measure;
    if (t > end_tol && t < 1.0 - end_tol) return 0.5;
  }
  // Vertex: the edge ending here and the edge starting here, in traversal order.
  const auto& segs = domain.segments();
  const int n = static_cast<int>(segs.size());
  for (int i = 0; i < n; ++i) {
    const Segment& out = segs[i];
    if ((out.origin - p).norm() > tol) continue;
    const Segment& in = segs[(i + n - 1) % n];
    const Point& d_in = in.spans[0];
    const Point& d_out = out.spans[0];
    const double turn = std::atan2(d_in(0) * d_out(1) - d_in(1) * d_out(0), d_in.dot(d_out));
    return (std::numbers::pi - turn) / (2.0 * std::numbers::pi);
  }
  return 0.5;
}

std::vector<Point> boundary_sources(const Domain& domain, int per_edge) {
  if (per_edge < 1) throw ConfigurationError("boundary source count per edge must be >= 1");
  std::vector<Point> out;
  for (const auto& seg : domain.segments()) {
    if (domain.dim() == 2) {
      const int m = panels_for(seg.measure, per_edge);
      for (int k = 0; k < m; ++k) out.push_back(seg.at((k + 0.5) / m));
    } else {
      const int m = per_edge;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) out.push_back(seg.at((i + 0.5) / m, (j + 0.5) / m));
      }
    }
  }
  return out;
}

std::vector<BoundaryNode> boundary_check_points(const Domain& domain, int per_edge) {
  if (per_edge < 1) throw ConfigurationError("check point count per edge must be >= 1");
  std::vector<BoundaryNode> out;
  for (const auto& seg : domain.segments()) {
    if (domain.dim() == 2) {
      const int m = panels_for(seg.measure, per_edge);
      for (int k = 0; k < m; ++k) {
        out.push_back({seg.at((k + kCheckOffset) / m), seg.normal, seg.measure / m, seg.id, {}, {}});
      }
    } else {
      const int m = per_edge;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          out.push_back({seg.at((i + kCheckOffset) / m, (j + 1.0 - kCheckOffset) / m), seg.normal, seg.measure / (m * m), seg.id, {}, {}});
        }
      }
    }
  }
  return out;
}

}  // namespace bcid
