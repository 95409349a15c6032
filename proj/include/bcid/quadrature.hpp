#pragma once

#include <span>
#include <vector>

namespace bcid {

/// Gauss-Legendre rule on (-1, 1).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

inline constexpr int kMaxGaussOrder = 32;

/// Throws ConfigurationError unless 1 <= n <= kMaxGaussOrder.
QuadratureRule gauss_legendre(int n);

/// Sum of values[k] * weights[k]; throws ContractViolation on length mismatch.
double integrate(std::span<const double> values, std::span<const double> weights);

}  // namespace bcid
