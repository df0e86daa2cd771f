#pragma once

#include "podrom/assembly.hpp"
#include "podrom/fe_space.hpp"
#include "podrom/mesh.hpp"
#include "podrom/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

namespace podrom::test
{

inline std::shared_ptr<const Mesh> square(int n)
{
  return std::make_shared<const Mesh>(build_rect_mesh(1.0, 1.0, n, n));
}

inline Eigen::VectorXd random_vector(std::mt19937_64 &rng, Eigen::Index n, double scale = 1.0)
{
  std::uniform_real_distribution<double> d(-scale, scale);
  Eigen::VectorXd                        v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = d(rng);
  return v;
}

/// Zeroes the constrained entries of a vector.
inline Eigen::VectorXd zero_constrained(const FESpace &space, Eigen::VectorXd v)
{
  for (int d : space.constrained_dofs())
    v[d] = 0.0;
  return v;
}

inline double relative_asymmetry(const SparseMatrix &m)
{
  const SparseMatrix d = m - SparseMatrix(m.transpose());
  const double       n = m.norm();
  return n > 0.0 ? d.norm() / n : d.norm();
}

/// Integral of f over all triangles with a high-order rule (independent of
/// any FE basis).
template <typename F> double integrate(const Mesh &mesh, F &&f, int degree = 12)
{
  const QuadratureRule rule = triangle_rule(degree);
  double               s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(mesh, t);
      for (std::size_t q = 0; q < rule.size(); ++q)
        s += 2.0 * geo.area * rule.weights[q] * f(geo.map(rule.points[q]));
    }
  return s;
}

/// F[i](j, k) = integral over the boundary of (phi_i . n)(phi_j . phi_k),
/// the amount by which b_h(phi_i, ., .) fails to be skew on the columns of
/// Phi. Uses a 6-point edge rule, exact for P2 triple products.
inline std::vector<Eigen::MatrixXd> boundary_flux_tensor(const FESpace &V, const Eigen::MatrixXd &Phi)
{
  const Mesh      &mesh = V.mesh();
  const Eigen::Index r = Phi.cols();
  std::vector<int> edge_triangle(mesh.n_edges(), -1);
  for (int t = 0; t < mesh.n_triangles(); ++t)
    for (int e : mesh.triangle_edges()[t])
      edge_triangle[e] = t;
  std::vector<double> gx, gw;
  gauss_legendre_01(6, gx, gw);

  std::vector<Eigen::MatrixXd> F(r, Eigen::MatrixXd::Zero(r, r));
  for (const auto &be : mesh.boundary_edges())
    {
      const int   t = edge_triangle[be.edge];
      const auto &tri = mesh.triangles()[t];
      int         l0 = -1, l1 = -1;
      for (int m = 0; m < 3; ++m)
        {
          if (tri[m] == be.v0)
            l0 = m;
          if (tri[m] == be.v1)
            l1 = m;
        }
      const Point &a = mesh.vertices()[be.v0];
      const Point &b = mesh.vertices()[be.v1];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      const double nx = (b.y - a.y) / len, ny = -(b.x - a.x) / len;
      for (std::size_t q = 0; q < gx.size(); ++q)
        {
          std::array<double, 3> bary{0.0, 0.0, 0.0};
          bary[l0] = 1.0 - gx[q];
          bary[l1] = gx[q];
          Eigen::VectorXd ux(r), uy(r);
          for (Eigen::Index i = 0; i < r; ++i)
            {
              const FieldValue fv = eval_field(V, Phi.col(i), t, bary);
              ux[i] = fv.value[0];
              uy[i] = fv.value[1];
            }
          const Eigen::MatrixXd dots = ux * ux.transpose() + uy * uy.transpose();
          const Eigen::VectorXd flux = nx * ux + ny * uy;
          for (Eigen::Index i = 0; i < r; ++i)
            F[i] += gw[q] * len * flux[i] * dots;
        }
    }
  return F;
}

constexpr double pi = 3.14159265358979323846;

} // namespace podrom::test
