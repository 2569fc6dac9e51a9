#pragma once

#include <vector>

namespace eqot {

/// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Node/weight pairs mapped to [a, b].
  std::vector<std::pair<double, double>> mapped(double a, double b) const;
};

/// Nodes and weights of the n-point Gauss-Legendre rule (Newton on the
/// Legendre polynomial; exact for polynomials of degree 2n-1). Results for a
/// given n are cached.
const QuadratureRule& gauss_legendre(int n);

/// Integrate f over [a, b] with the n-point rule.
template <typename F>
double integrate(F&& f, double a, double b, int n = 64) {
  const QuadratureRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * acc;
}

}  // namespace eqot
