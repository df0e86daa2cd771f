#include "podrom/quadrature.hpp"

#include "podrom/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace podrom
{

void gauss_legendre_01(int n, std::vector<double> &nodes, std::vector<double> &weights)
{
  if (n < 1)
    throw ValidationError("Gauss-Legendre rule needs at least one point");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // P_n(x) and P_{n-1}(x) by the three-term recurrence
  const auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k)
      {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
    return std::array<double, 2>{p1, p0};
  };
  const auto derivative = [n](double x, const std::array<double, 2> &p) {
    return n * (x * p[0] - p[1]) / (x * x - 1.0);
  };

  for (int i = 0; i < (n + 1) / 2; ++i)
    {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it)
        {
          const auto   p = legendre(x);
          const double dx = p[0] / derivative(x, p);
          x -= dx;
          if (std::abs(dx) < 1e-16)
            break;
        }
      const double dp = derivative(x, legendre(x));
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);

      // map [-1,1] -> [0,1]
      nodes[i] = 0.5 * (1.0 - x);
      nodes[n - 1 - i] = 0.5 * (1.0 + x);
      weights[i] = 0.5 * w;
      weights[n - 1 - i] = 0.5 * w;
    }
}

QuadratureRule triangle_rule(int degree)
{
  if (degree < 0)
    throw ValidationError("quadrature degree must be nonnegative");
  // the Duffy factor (1-u) raises the degree in u by one
  const int n = std::max(1, (degree + 2 + 1) / 2);

  std::vector<double> t, w;
  gauss_legendre_01(n, t, w);

  QuadratureRule rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      {
        const double x = t[i];
        const double y = t[j] * (1.0 - t[i]);
        rule.points.push_back({1.0 - x - y, x, y});
        rule.weights.push_back(w[i] * w[j] * (1.0 - t[i]));
      }
  return rule;
}

} // namespace podrom
