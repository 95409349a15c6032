#pragma once

#include <vector>

#include "bcid/autodiff.hpp"
#include "bcid/collocation.hpp"
#include "bcid/kernels.hpp"
#include "bcid/network.hpp"

namespace bcid {

/// Data-only parts of the residuals, fixed for a run.
struct BoundaryTerms {
  /// F(P_i) = c u-bar(P_i) + sum_Q u-bar dG/dn w - sum_Q G q-bar w, per boundary source.
  Vector values;
  /// The same quantity at the held-out check points.
  Vector check_values;
  /// sum_Q u-bar dG/dn w - sum_Q G q-bar w, per interior source.
  Vector interior;
};

/// Throws DataError naming the first node without both boundary values.
BoundaryTerms boundary_terms(const CollocationSet& colloc, const KernelMatrices& kernels);
Vector interior_terms(const CollocationSet& colloc, const KernelMatrices& kernels);

/// R1(P_i) = F(P_i) - sum_q G(q, P_i) u1(q) w_q.
Vector residual_r1(const BoundaryTerms& terms, const KernelMatrices& kernels, const CollocationSet& colloc,
                   const NetworkParams& approximator);

/// R2(p_j) = u2(p_j) + interior data term - sum_q G(q, p_j) u1(q) w_q.
Vector residual_r2(const CollocationSet& colloc, const KernelMatrices& kernels, const BoundaryTerms& terms,
                   const NetworkParams& approximator, const NetworkParams& generator);

double loss1(const Vector& r);
double loss2(const Vector& r);

/// Mean squared mismatch between the generator and held-out Dirichlet values.
double loss3(const NetworkParams& generator, const std::vector<BoundaryNode>& check_points);

/// Precomputed, weight-folded operators for repeated residual evaluation
/// during training. Owns its collocation set and kernels.
class Assembler {
 public:
  Assembler(CollocationSet colloc, KernelMatrices kernels);

  const CollocationSet& colloc() const { return colloc_; }
  const KernelMatrices& kernels() const { return kernels_; }
  const BoundaryTerms& terms() const { return terms_; }

  /// Replaces the interior sources (kernel rows and data terms are refreshed).
  void set_interior_sources(std::vector<Point> sources);

  Vector r1(const NetworkParams& approximator) const;
  /// R1 for a known source field, e.g. an analytic g used for validation.
  Vector r1(const ScalarField& g) const;
  Vector r1_check(const NetworkParams& approximator) const;
  Vector r2(const NetworkParams& approximator, const NetworkParams& generator) const;
  /// u2 minus observed values at the supervision points (check points, then
  /// any interior observations).
  Vector mismatch(const NetworkParams& generator) const;
  Eigen::Index supervision_count() const { return sup_values_.size(); }

  // Tape versions; results are 1 x n rows.
  Var r1(Tape& tape, const NetworkVars& approximator) const;
  Var r1_check(Tape& tape, const NetworkVars& approximator) const;
  Var r2(Tape& tape, const NetworkParams& approximator, const NetworkVars& generator) const;
  Var mismatch(Tape& tape, const NetworkVars& generator) const;

 private:
  void refresh_interior();

  CollocationSet colloc_;
  KernelMatrices kernels_;
  BoundaryTerms terms_;
  Matrix nodes_;         // d x M_i
  Matrix a1t_;           // M_i x N_b, (G_bi diag w)^T
  Matrix act_;           // M_i x N_d
  Matrix a2t_;           // M_i x N_i
  Matrix sources_;       // d x N_i
  Matrix sup_points_;    // d x (N_d + observations)
  Vector sup_values_;
};

}  // namespace bcid
