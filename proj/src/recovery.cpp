#include "bcid/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bcid/autodiff.hpp"
#include "bcid/errors.hpp"
#include "bcid/trainer.hpp"

namespace bcid {

namespace {

constexpr std::size_t kMinRegionNodes = 5;
constexpr double kTinySource = 1e-10;

}  // namespace

double MediumField::operator()(const Point& x) const {
  if (kind == Kind::NetworkSurrogate) return forward(surrogate, x);
  for (const auto& r : regions)
    if (r.contains(x)) return r.true_value;
  return std::numeric_limits<double>::quiet_NaN();
}

Vector MediumField::evaluate(const Matrix& points) const {
  if (kind == Kind::NetworkSurrogate) return forward(surrogate, points);
  Vector out(points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) out(j) = (*this)(points.col(j));
  return out;
}

RecoveryInputs recovery_inputs(const std::vector<DomainNode>& nodes, const NetworkParams& g_net,
                               const NetworkParams& u_net, const ScalarField& f) {
  if (nodes.empty()) throw ConfigurationError("recovery needs interior nodes");
  RecoveryInputs in;
  const auto n = static_cast<Eigen::Index>(nodes.size());
  in.points.resize(nodes.front().position.size(), n);
  in.weights.resize(n);
  in.f.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    in.points.col(j) = nodes[j].position;
    in.weights(j) = nodes[j].weight;
    in.f(j) = f(nodes[j].position);
  }
  in.g = forward(g_net, in.points);
  in.grad_u = forward_with_gradient(u_net, in.points).gradients;
  return in;
}

RecoveryInputs recovery_inputs(const std::vector<DomainNode>& nodes, const ScalarField& g, const VectorField& grad_u,
                               const ScalarField& f) {
  if (nodes.empty()) throw ConfigurationError("recovery needs interior nodes");
  RecoveryInputs in;
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const auto d = nodes.front().position.size();
  in.points.resize(d, n);
  in.grad_u.resize(d, n);
  in.weights.resize(n);
  in.f.resize(n);
  in.g.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Point& p = nodes[j].position;
    in.points.col(j) = p;
    in.weights(j) = nodes[j].weight;
    in.f(j) = f(p);
    in.g(j) = g(p);
    if (grad_u) in.grad_u.col(j) = grad_u(p);
    else in.grad_u.col(j).setZero();
  }
  return in;
}

Point default_anchor_position(const std::vector<BoundaryNode>& boundary, const NetworkParams& u_net) {
  if (boundary.empty()) throw ConfigurationError("no boundary nodes to anchor on");
  Matrix pts(boundary.front().position.size(), static_cast<Eigen::Index>(boundary.size()));
  for (std::size_t k = 0; k < boundary.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = boundary[k].position;
  const auto vg = forward_with_gradient(u_net, pts);
  Eigen::Index best = 0;
  vg.gradients.colwise().norm().maxCoeff(&best);
  return pts.col(best);
}

void RecoveryConfig::validate() const {
  if (epochs < 1) throw ConfigurationError("[recovery] epochs: must be >= 1");
  if (!(lr > 0)) throw ConfigurationError("[recovery] lr: must be > 0");
  if (width < 1 || blocks < 0) throw ConfigurationError("[recovery] width/blocks: out of range");
  if (!(anchor_weight > 0)) throw ConfigurationError("[recovery] anchor_weight: must be > 0");
  if (!(smoothness >= 0)) throw ConfigurationError("[recovery] smoothness: must be >= 0");
  if (!(positivity_tolerance >= 0 && positivity_tolerance <= 1))
    throw ConfigurationError("[recovery] positivity_tolerance: must lie in [0, 1]");
}

RecoveryResult recover_smooth(const RecoveryInputs& in, const std::vector<Anchor>& anchors, const RecoveryConfig& cfg,
                              const Matrix& check_points) {
  cfg.validate();
  if (anchors.empty()) throw ConfigurationError("smooth recovery needs an anchor (point and known medium value)");
  const Eigen::Index n = in.points.cols();
  const auto d = static_cast<int>(in.points.rows());
  if (n == 0) throw ConfigurationError("recovery needs interior points");
  if (in.g.size() != n || in.f.size() != n || in.grad_u.cols() != n || in.grad_u.rows() != d)
    throw ContractViolation("recovery inputs have inconsistent sizes");

  NetworkParams net = init_network(cfg.seed ^ 0x5BD1E995ULL, cfg.width, d, cfg.blocks);
  Matrix anchor_pts(d, static_cast<Eigen::Index>(anchors.size()));
  Matrix target(1, anchor_pts.cols());
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (anchors[k].position.size() != d) throw ConfigurationError("anchor dimension does not match the domain");
    anchor_pts.col(static_cast<Eigen::Index>(k)) = anchors[k].position;
    target(0, static_cast<Eigen::Index>(k)) = anchors[k].value;
  }
  // Start from the constant anchor value: zero read-out, bias at the mean target.
  net.w_out.setZero();
  net.b_out(0, 0) = target.mean();

  const Matrix g_row = in.g.transpose();
  const Matrix f_row = in.f.transpose();
  std::vector<Matrix> grad_rows;
  for (int i = 0; i < d; ++i) grad_rows.push_back(in.grad_u.row(i));

  auto loss = [&](Tape& t, std::span<const Var> v) {
    const NetworkVars nv = bind_vars(net, v);
    const TapeForward tf = forward_with_gradient(t, nv, in.points);
    Var r = t.add(t.scale(t.mul(tf.values, t.constant(g_row)), -1.0), t.constant(f_row));
    for (int i = 0; i < d; ++i) r = t.add(r, t.mul(tf.gradients[static_cast<std::size_t>(i)], t.constant(grad_rows[static_cast<std::size_t>(i)])));
    const Var a = t.sub(forward(t, nv, t.constant(anchor_pts)), t.constant(target));
    Var total = t.add(t.mean(t.square(r)), t.scale(t.mean(t.square(a)), cfg.anchor_weight));
    if (cfg.smoothness > 0)
      for (const Var& gi : tf.gradients) total = t.add(total, t.scale(t.mean(t.square(gi)), cfg.smoothness));
    return total;
  };

  RecoveryResult out;
  AdamState st = adam_init(std::as_const(net).tensors());
  for (int e = 0; e < cfg.epochs; ++e) {
    std::vector<Matrix> cur;
    for (const Matrix* m : std::as_const(net).tensors()) cur.push_back(*m);
    auto [value, grads] = value_and_grad(loss, cur);
    if (!std::isfinite(value)) throw NumericError("recovery loss became non-finite at epoch " + std::to_string(e));
    out.loss_history.push_back(value);
    adam_step(net.tensors(), grads, st, cfg.lr, 0.9, 0.999, 1e-8);
  }

  out.field.kind = MediumField::Kind::NetworkSurrogate;
  out.field.surrogate = net;
  const Matrix& grid = check_points.size() > 0 ? check_points : in.points;
  const Vector eps = forward(net, grid);
  const auto bad = (eps.array() <= 0.0 || !eps.array().isFinite()).count();
  if (static_cast<double>(bad) > cfg.positivity_tolerance * static_cast<double>(eps.size()))
    out.warnings.push_back("recovered medium is non-positive at " + std::to_string(bad) + " of " +
                           std::to_string(eps.size()) + " evaluation points");
  return out;
}

double weighted_median(std::vector<double> values, std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size()) throw ContractViolation("weighted_median: bad sizes");
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i : idx) {
    acc += weights[i];
    if (acc >= 0.5 * total) return values[i];
  }
  return values[idx.back()];
}

RecoveryResult recover_piecewise(const RecoveryInputs& in, const std::vector<Region>& regions) {
  if (regions.empty()) throw ConfigurationError("piecewise recovery needs at least one region");
  RecoveryResult out;
  out.field.kind = MediumField::Kind::PiecewiseConstants;
  for (const auto& region : regions) {
    std::vector<double> ratios, w;
    std::size_t tiny = 0;
    for (Eigen::Index j = 0; j < in.points.cols(); ++j) {
      if (!region.contains(in.points.col(j))) continue;
      const double g = in.g(j);
      if (std::abs(g) <= kTinySource * std::max(1.0, std::abs(in.f(j)))) {
        ++tiny;
        continue;
      }
      ratios.push_back(in.f(j) / g);
      w.push_back(in.weights.size() ? in.weights(j) : 1.0);
    }
    if (ratios.size() + tiny < kMinRegionNodes)
      throw ConfigurationError("region '" + region.name + "' has " + std::to_string(ratios.size() + tiny) +
                               " interior nodes; at least 5 are needed");
    if (tiny * 2 >= ratios.size() + tiny)
      throw NumericError("region '" + region.name + "' is ill-conditioned: the equivalent source is near zero");
    Region est = region;
    est.true_value = weighted_median(std::move(ratios), std::move(w));
    if (!(est.true_value > 0))
      out.warnings.push_back("region '" + region.name + "' has non-positive medium estimate " +
                             format_double(est.true_value));
    out.field.regions.push_back(std::move(est));
  }
  return out;
}

}  // namespace bcid
