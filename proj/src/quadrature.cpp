#include "bcid/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "bcid/errors.hpp"

namespace bcid {

QuadratureRule gauss_legendre(int n) {
  if (n < 1 || n > kMaxGaussOrder) {
    throw ConfigurationError("Gauss-Legendre order must be in [1, " + std::to_string(kMaxGaussOrder) +
                             "], got " + std::to_string(n));
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton on P_n for the upper half, mirrored to keep the rule exactly symmetric.
  auto legendre = [n](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    // value and derivative of P_n
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double integrate(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size()) {
    throw ContractViolation("integrate: " + std::to_string(values.size()) + " values vs " +
                            std::to_string(weights.size()) + " weights");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) sum += values[k] * weights[k];
  return sum;
}

}  // namespace bcid
