#pragma once

#include <array>
#include <vector>

namespace podrom
{

/// Quadrature on the reference triangle {(x,y): x,y >= 0, x+y <= 1}.
///
/// Points are stored in barycentric coordinates (l0, l1, l2) with
/// l1 = x, l2 = y. Weights sum to the reference area 1/2.
struct QuadratureRule
{
  std::vector<std::array<double, 3>> points;
  std::vector<double>                weights;
  int                                degree = 0;

  std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre rule with n points on [0, 1].
void gauss_legendre_01(int n, std::vector<double> &nodes, std::vector<double> &weights);

/// Collapsed (Duffy) Gauss product rule, exact for polynomials of total
/// degree <= `degree`.
QuadratureRule triangle_rule(int degree);

} // namespace podrom
