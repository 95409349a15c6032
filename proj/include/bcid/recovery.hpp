#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bcid/network.hpp"
#include "bcid/problem.hpp"
#include "bcid/types.hpp"

namespace bcid {

/// Recovered medium: either a surrogate network or per-region constants.
struct MediumField {
  enum class Kind { NetworkSurrogate, PiecewiseConstants };
  Kind kind = Kind::NetworkSurrogate;
  NetworkParams surrogate;      ///< NetworkSurrogate only
  std::vector<Region> regions;  ///< PiecewiseConstants: true_value holds the estimate

  double operator()(const Point& x) const;
  Vector evaluate(const Matrix& points) const;
};

/// Samples of the learned fields at recovery collocation points.
struct RecoveryInputs {
  Matrix points;    ///< d x n
  Vector weights;   ///< n, quadrature weights (used by the piecewise median)
  Vector g;         ///< equivalent source
  Matrix grad_u;    ///< d x n
  Vector f;
};

RecoveryInputs recovery_inputs(const std::vector<DomainNode>& nodes, const NetworkParams& g_net,
                               const NetworkParams& u_net, const ScalarField& f);
RecoveryInputs recovery_inputs(const std::vector<DomainNode>& nodes, const ScalarField& g, const VectorField& grad_u,
                               const ScalarField& f);

struct Anchor {
  Point position;
  double value = 0.0;
};

/// Boundary node with the largest |grad u|, where the anchor conditions best.
Point default_anchor_position(const std::vector<BoundaryNode>& boundary, const NetworkParams& u_net);

struct RecoveryConfig {
  int epochs = 3000;
  double lr = 1e-2;
  int width = kDefaultWidth;
  int blocks = kDefaultBlocks;
  double anchor_weight = 10.0;
  /// Weight of mean |grad eps|^2; selects the smoothest member of the
  /// family left free by the transport equation.
  double smoothness = 0.0;
  std::uint64_t seed = 0;
  /// Fraction of the evaluation grid allowed to be non-positive before warning.
  double positivity_tolerance = 0.01;

  void validate() const;
};

struct RecoveryResult {
  MediumField field;
  std::vector<double> loss_history;
  std::vector<std::string> warnings;
};

/// Fits eps_phi to grad eps . grad u - g eps + f = 0 plus an anchor penalty
/// (mean over the anchors). `check_points` (d x n, may be empty) is the grid
/// used for the positivity warning.
RecoveryResult recover_smooth(const RecoveryInputs& in, const std::vector<Anchor>& anchors, const RecoveryConfig& cfg,
                              const Matrix& check_points = {});

/// Per region, eps = f / g; the estimate is the weighted median over the
/// region's nodes. Regions' true_value fields are ignored on input.
RecoveryResult recover_piecewise(const RecoveryInputs& in, const std::vector<Region>& regions);

/// Weighted median: smallest v with cumulative weight >= half the total.
double weighted_median(std::vector<double> values, std::vector<double> weights);

}  // namespace bcid
