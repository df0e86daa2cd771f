#pragma once

#include "podrom/mesh.hpp"
#include "podrom/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace podrom
{

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>; ///< Mat2[c][d] = d(component c)/d(x_d)

/// Affine data of one triangle: barycentric gradients and the map x(lambda).
struct ElementGeometry
{
  std::array<Point, 3> vertices;
  std::array<Vec2, 3>  grad_lambda;
  double               area = 0.0;
  double               h = 0.0;

  Point map(const std::array<double, 3> &bary) const;
};

ElementGeometry element_geometry(const Mesh &mesh, int triangle);

/// Number of local nodes of the scalar Lagrange element of the given degree.
constexpr int nodes_per_element(int degree) { return degree == 1 ? 3 : 6; }

/// Lagrange shape functions on a triangle in barycentric form. Local nodes:
/// vertices 0,1,2, then (P2) midpoints of edges (0,1), (1,2), (2,0).
void shape_values(int degree, const std::array<double, 3> &bary, std::span<double> values);

/// Derivatives of the shape functions w.r.t. the three barycentric
/// coordinates; the physical gradient is sum_m d/dlambda_m * grad(lambda_m).
void shape_bary_derivatives(int degree, const std::array<double, 3> &bary, std::span<std::array<double, 3>> out);

/// Continuous Lagrange space of degree 1 or 2 with one or two components.
///
/// Scalar DOFs are numbered vertices first, then (P2) edges in mesh order.
/// Vector DOFs are component blocked: global = component * n_scalar + scalar.
/// DOFs on edges with a Dirichlet tag are constrained. A zero-mean flag marks
/// the space as a realization of L^2_0.
class FESpace
{
public:
  FESpace(std::shared_ptr<const Mesh> mesh,
          int                         degree,
          int                         components,
          std::vector<BoundaryTag>    dirichlet_tags = {},
          bool                        zero_mean = false);

  const Mesh                  &mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh>  mesh_ptr() const { return mesh_; }
  int                          degree() const { return degree_; }
  int                          components() const { return components_; }
  int                          n_scalar() const { return n_scalar_; }
  int                          n_dofs() const { return n_scalar_ * components_; }
  int                          local_size() const { return nodes_per_element(degree_); }
  bool                         zero_mean() const { return zero_mean_; }

  const std::vector<BoundaryTag> &dirichlet_tags() const { return dirichlet_tags_; }

  /// Scalar DOFs of a triangle in local node order.
  std::span<const int> element_dofs(int triangle) const;

  /// Position of a scalar DOF.
  const Point &node(int scalar_dof) const { return nodes_[scalar_dof]; }

  /// Constrained global DOFs, sorted.
  const std::vector<int> &constrained_dofs() const { return constrained_; }
  bool                    is_constrained(int global_dof) const { return constrained_mask_[global_dof]; }

  /// Scalar DOFs lying on boundary edges carrying one of `tags`, sorted.
  std::vector<int> boundary_scalar_dofs(std::span<const BoundaryTag> tags) const;

  /// True when every boundary edge is Dirichlet constrained.
  bool fully_constrained() const;

  /// Digest of mesh, degree, components, and constraint set.
  std::uint64_t signature() const;

private:
  std::shared_ptr<const Mesh> mesh_;
  int                         degree_;
  int                         components_;
  int                         n_scalar_ = 0;
  bool                        zero_mean_;
  std::vector<BoundaryTag>    dirichlet_tags_;
  std::vector<int>            dof_map_;
  std::vector<Point>          nodes_;
  std::vector<int>            constrained_;
  std::vector<bool>           constrained_mask_;
};

/// Coefficient vector over a space.
struct FEField
{
  std::shared_ptr<const FESpace> space;
  Eigen::VectorXd                coefficients;

  FEField() = default;
  explicit FEField(std::shared_ptr<const FESpace> s);
  FEField(std::shared_ptr<const FESpace> s, Eigen::VectorXd c);
};

struct FieldValue
{
  Vec2 value{0.0, 0.0};
  Mat2 gradient{};
};

/// Value and gradient of `coefficients` (over `space`) at a barycentric point
/// of `triangle`. Scalar spaces use component 0 only.
FieldValue eval_field(const FESpace            &space,
                      const Eigen::VectorXd    &coefficients,
                      int                       triangle,
                      const std::array<double, 3> &bary);
FieldValue eval_field(const FEField &field, int triangle, const std::array<double, 3> &bary);

using ScalarFunction = std::function<double(const Point &)>;
using VectorFunction = std::function<Vec2(const Point &)>;

/// Nodal interpolants.
Eigen::VectorXd interpolate(const FESpace &space, const ScalarFunction &g);
Eigen::VectorXd interpolate(const FESpace &space, const VectorFunction &g);

/// Tabulated shape data at the points of a quadrature rule.
struct ShapeTable
{
  int                                             n_local = 0;
  QuadratureRule                                  rule;
  std::vector<std::vector<double>>                values;      ///< [q][i]
  std::vector<std::vector<std::array<double, 3>>> bary_derivs; ///< [q][i][m]

  ShapeTable(int degree, int quadrature_degree);

  /// Physical gradients of all local shape functions at point q.
  void gradients(const ElementGeometry &geo, std::size_t q, std::span<Vec2> out) const;
};

} // namespace podrom
