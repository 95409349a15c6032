#pragma once

#include "bcid/collocation.hpp"
#include "bcid/types.hpp"

namespace bcid {

inline constexpr double kSingularityRadius = 1e-12;

/// Laplace fundamental solution: -ln(r)/2pi in 2D, 1/(4 pi r) in 3D.
double fundamental_solution(const Point& x, const Point& y, int d);

/// Derivative of fundamental_solution(x, y) with respect to y along n_y.
double normal_derivative(const Point& x, const Point& y, const Point& n_y, int d);

/// Kernel values between every source point (rows) and integration node (columns).
struct KernelMatrices {
  Matrix g_bb;     ///< N_b x M_b, u*(Q, P)
  Matrix dgdn_bb;  ///< N_b x M_b, du*(Q, P)/dn
  Matrix g_bi;     ///< N_b x M_i, u*(q, P)
  Matrix g_ib;     ///< N_i x M_b
  Matrix dgdn_ib;  ///< N_i x M_b
  Matrix g_ii;     ///< N_i x M_i
  // held-out boundary check points as sources
  Matrix g_cb;
  Matrix dgdn_cb;
  Matrix g_ci;
};

KernelMatrices precompute(const CollocationSet& colloc, int d);

/// Recomputes only the interior-source rows (after resampling).
void precompute_interior_rows(KernelMatrices& kernels, const CollocationSet& colloc, int d);

}  // namespace bcid
