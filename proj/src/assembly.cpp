#include "bcid/assembly.hpp"

#include <sstream>

#include "bcid/errors.hpp"

namespace bcid {

namespace {

std::string where(const char* kind, std::size_t k, const Point& p) {
  std::ostringstream os;
  os << kind << ' ' << k << " at (" << p.transpose() << ")";
  return os.str();
}

// u-bar * w and q-bar * w over the boundary integration nodes.
std::pair<Vector, Vector> weighted_data(const CollocationSet& c) {
  const auto mb = static_cast<Eigen::Index>(c.boundary_nodes.size());
  Vector uw(mb), qw(mb);
  for (Eigen::Index j = 0; j < mb; ++j) {
    const auto& n = c.boundary_nodes[static_cast<std::size_t>(j)];
    if (!n.dirichlet) throw DataError("missing Dirichlet value at " + where("boundary node", static_cast<std::size_t>(j), n.position));
    if (!n.neumann) throw DataError("missing Neumann value at " + where("boundary node", static_cast<std::size_t>(j), n.position));
    uw(j) = *n.dirichlet * n.weight;
    qw(j) = *n.neumann * n.weight;
  }
  return {uw, qw};
}

Vector source_values(const std::vector<BoundaryNode>& nodes, const char* kind) {
  Vector v(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!nodes[k].dirichlet) throw DataError("missing Dirichlet value at " + where(kind, k, nodes[k].position));
    v(static_cast<Eigen::Index>(k)) = *nodes[k].dirichlet;
  }
  return v;
}

double mean_square(const Vector& r) { return r.size() == 0 ? 0.0 : r.squaredNorm() / static_cast<double>(r.size()); }

}  // namespace

Vector interior_terms(const CollocationSet& c, const KernelMatrices& k) {
  auto [uw, qw] = weighted_data(c);
  return k.dgdn_ib * uw - k.g_ib * qw;
}

BoundaryTerms boundary_terms(const CollocationSet& c, const KernelMatrices& k) {
  auto [uw, qw] = weighted_data(c);
  BoundaryTerms t;
  const Vector ub = source_values(c.boundary_sources, "boundary source");
  t.values = c.corner_coefficients.cwiseProduct(ub) + k.dgdn_bb * uw - k.g_bb * qw;
  if (!c.check_points.empty()) {
    const Vector uc = source_values(c.check_points, "check point");
    const Domain domain(c.shape);
    Vector cc(uc.size());
    for (std::size_t i = 0; i < c.check_points.size(); ++i)
      cc(static_cast<Eigen::Index>(i)) = corner_coefficient(c.check_points[i].position, domain);
    t.check_values = cc.cwiseProduct(uc) + k.dgdn_cb * uw - k.g_cb * qw;
  }
  t.interior = k.dgdn_ib * uw - k.g_ib * qw;
  return t;
}

Vector residual_r1(const BoundaryTerms& terms, const KernelMatrices& k, const CollocationSet& c,
                   const NetworkParams& approximator) {
  if (c.interior_nodes.empty()) throw ConfigurationError("residual_r1 needs interior integration nodes");
  const Vector g = forward(approximator, c.interior_node_positions());
  return terms.values - k.g_bi * g.cwiseProduct(c.interior_node_weights());
}

Vector residual_r2(const CollocationSet& c, const KernelMatrices& k, const BoundaryTerms& terms,
                   const NetworkParams& approximator, const NetworkParams& generator) {
  const Vector g = forward(approximator, c.interior_node_positions());
  const Vector u = forward(generator, c.interior_source_positions());
  return u + terms.interior - k.g_ii * g.cwiseProduct(c.interior_node_weights());
}

double loss1(const Vector& r) { return mean_square(r); }
double loss2(const Vector& r) { return mean_square(r); }

double loss3(const NetworkParams& generator, const std::vector<BoundaryNode>& check_points) {
  if (check_points.empty()) throw ConfigurationError("loss3 needs at least one check point");
  Matrix x(generator.input_dim, static_cast<Eigen::Index>(check_points.size()));
  for (std::size_t k = 0; k < check_points.size(); ++k) x.col(static_cast<Eigen::Index>(k)) = check_points[k].position;
  const Vector actual = source_values(check_points, "check point");
  return mean_square(forward(generator, x) - actual);
}

Assembler::Assembler(CollocationSet colloc, KernelMatrices kernels)
    : colloc_(std::move(colloc)), kernels_(std::move(kernels)) {
  if (colloc_.interior_nodes.empty()) throw ConfigurationError("assembler needs interior integration nodes");
  terms_ = boundary_terms(colloc_, kernels_);
  nodes_ = colloc_.interior_node_positions();
  const Vector w = colloc_.interior_node_weights();
  a1t_ = (kernels_.g_bi * w.asDiagonal()).transpose();
  if (!colloc_.check_points.empty()) act_ = (kernels_.g_ci * w.asDiagonal()).transpose();
  refresh_interior();

  const auto nd = static_cast<Eigen::Index>(colloc_.check_points.size());
  const auto no = static_cast<Eigen::Index>(colloc_.interior_observations.size());
  sup_points_.resize(colloc_.dim, nd + no);
  sup_values_.resize(nd + no);
  if (nd > 0) {
    sup_points_.leftCols(nd) = colloc_.check_point_positions();
    sup_values_.head(nd) = colloc_.check_point_values();
  }
  for (Eigen::Index k = 0; k < no; ++k) {
    const auto& o = colloc_.interior_observations[static_cast<std::size_t>(k)];
    sup_points_.col(nd + k) = o.position;
    sup_values_(nd + k) = o.value;
  }
}

void Assembler::refresh_interior() {
  const Vector w = colloc_.interior_node_weights();
  a2t_ = (kernels_.g_ii * w.asDiagonal()).transpose();
  sources_ = colloc_.interior_source_positions();
}

void Assembler::set_interior_sources(std::vector<Point> sources) {
  colloc_.interior_sources = std::move(sources);
  precompute_interior_rows(kernels_, colloc_, colloc_.dim);
  terms_.interior = interior_terms(colloc_, kernels_);
  refresh_interior();
}

Vector Assembler::r1(const NetworkParams& approximator) const {
  return terms_.values - a1t_.transpose() * forward(approximator, nodes_);
}

Vector Assembler::r1(const ScalarField& g) const {
  Vector values(nodes_.cols());
  for (Eigen::Index j = 0; j < nodes_.cols(); ++j) values(j) = g(nodes_.col(j));
  return terms_.values - a1t_.transpose() * values;
}

Vector Assembler::r1_check(const NetworkParams& approximator) const {
  if (act_.size() == 0) return {};
  return terms_.check_values - act_.transpose() * forward(approximator, nodes_);
}

Vector Assembler::r2(const NetworkParams& approximator, const NetworkParams& generator) const {
  return forward(generator, sources_) + terms_.interior - a2t_.transpose() * forward(approximator, nodes_);
}

Vector Assembler::mismatch(const NetworkParams& generator) const {
  if (sup_values_.size() == 0) return {};
  return forward(generator, sup_points_) - sup_values_;
}

Var Assembler::r1(Tape& tape, const NetworkVars& approximator) const {
  const Var g = forward(tape, approximator, tape.constant(nodes_));
  return tape.sub(tape.constant(terms_.values.transpose()), tape.matmul(g, tape.constant(a1t_)));
}

Var Assembler::r1_check(Tape& tape, const NetworkVars& approximator) const {
  if (act_.size() == 0) throw ConfigurationError("no check points configured");
  const Var g = forward(tape, approximator, tape.constant(nodes_));
  return tape.sub(tape.constant(terms_.check_values.transpose()), tape.matmul(g, tape.constant(act_)));
}

Var Assembler::r2(Tape& tape, const NetworkParams& approximator, const NetworkVars& generator) const {
  const Vector fixed = terms_.interior - a2t_.transpose() * forward(approximator, nodes_);
  const Var u = forward(tape, generator, tape.constant(sources_));
  return tape.add(u, tape.constant(fixed.transpose()));
}

Var Assembler::mismatch(Tape& tape, const NetworkVars& generator) const {
  if (sup_values_.size() == 0) throw ConfigurationError("no supervision points configured");
  const Var u = forward(tape, generator, tape.constant(sup_points_));
  return tape.sub(u, tape.constant(sup_values_.transpose()));
}

}  // namespace bcid
