#include "podrom/fe_space.hpp"

#include "podrom/digest.hpp"
#include "podrom/errors.hpp"

#include <algorithm>
#include <cmath>

namespace podrom
{

Point ElementGeometry::map(const std::array<double, 3> &bary) const
{
  Point p;
  for (int m = 0; m < 3; ++m)
    {
      p.x += bary[m] * vertices[m].x;
      p.y += bary[m] * vertices[m].y;
    }
  return p;
}

ElementGeometry element_geometry(const Mesh &mesh, int triangle)
{
  ElementGeometry geo;
  const auto &tri = mesh.triangles()[triangle];
  for (int m = 0; m < 3; ++m)
    geo.vertices[m] = mesh.vertices()[tri[m]];

  const auto &[p0, p1, p2] = geo.vertices;
  const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  geo.grad_lambda[0] = {(p1.y - p2.y) / det, (p2.x - p1.x) / det};
  geo.grad_lambda[1] = {(p2.y - p0.y) / det, (p0.x - p2.x) / det};
  geo.grad_lambda[2] = {(p0.y - p1.y) / det, (p1.x - p0.x) / det};
  geo.area = 0.5 * det;
  geo.h = mesh.h_K()[triangle];
  return geo;
}

void shape_values(int degree, const std::array<double, 3> &l, std::span<double> values)
{
  if (degree == 1)
    {
      for (int i = 0; i < 3; ++i)
        values[i] = l[i];
      return;
    }
  for (int i = 0; i < 3; ++i)
    values[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int k = 0; k < 3; ++k)
    values[3 + k] = 4.0 * l[k] * l[(k + 1) % 3];
}

void shape_bary_derivatives(int degree, const std::array<double, 3> &l, std::span<std::array<double, 3>> out)
{
  const int n = nodes_per_element(degree);
  for (int i = 0; i < n; ++i)
    out[i] = {0.0, 0.0, 0.0};
  if (degree == 1)
    {
      for (int i = 0; i < 3; ++i)
        out[i][i] = 1.0;
      return;
    }
  for (int i = 0; i < 3; ++i)
    out[i][i] = 4.0 * l[i] - 1.0;
  for (int k = 0; k < 3; ++k)
    {
      const int j = (k + 1) % 3;
      out[3 + k][k] = 4.0 * l[j];
      out[3 + k][j] = 4.0 * l[k];
    }
}

FESpace::FESpace(std::shared_ptr<const Mesh> mesh,
                 int                         degree,
                 int                         components,
                 std::vector<BoundaryTag>    dirichlet_tags,
                 bool                        zero_mean)
  : mesh_(std::move(mesh))
  , degree_(degree)
  , components_(components)
  , zero_mean_(zero_mean)
  , dirichlet_tags_(std::move(dirichlet_tags))
{
  if (!mesh_)
    throw ValidationError("FESpace: null mesh");
  if (degree_ != 1 && degree_ != 2)
    throw ValidationError("FESpace: degree must be 1 or 2, got " + std::to_string(degree_));
  if (components_ != 1 && components_ != 2)
    throw ValidationError("FESpace: components must be 1 or 2, got " + std::to_string(components_));
  std::sort(dirichlet_tags_.begin(), dirichlet_tags_.end());
  dirichlet_tags_.erase(std::unique(dirichlet_tags_.begin(), dirichlet_tags_.end()), dirichlet_tags_.end());

  const int nv = mesh_->n_vertices();
  n_scalar_ = degree_ == 1 ? nv : nv + mesh_->n_edges();

  const int nloc = local_size();
  dof_map_.resize(static_cast<std::size_t>(mesh_->n_triangles()) * nloc);
  for (int t = 0; t < mesh_->n_triangles(); ++t)
    {
      int *d = &dof_map_[static_cast<std::size_t>(t) * nloc];
      for (int m = 0; m < 3; ++m)
        d[m] = mesh_->triangles()[t][m];
      if (degree_ == 2)
        for (int k = 0; k < 3; ++k)
          d[3 + k] = nv + mesh_->triangle_edges()[t][k];
    }

  nodes_ = mesh_->vertices();
  if (degree_ == 2)
    for (const auto &e : mesh_->edges())
      {
        const Point &a = mesh_->vertices()[e[0]];
        const Point &b = mesh_->vertices()[e[1]];
        nodes_.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      }

  const auto scalar = boundary_scalar_dofs(dirichlet_tags_);
  for (int c = 0; c < components_; ++c)
    for (int s : scalar)
      constrained_.push_back(c * n_scalar_ + s);
  constrained_mask_.assign(n_dofs(), false);
  for (int g : constrained_)
    constrained_mask_[g] = true;
}

std::span<const int> FESpace::element_dofs(int triangle) const
{
  const int nloc = local_size();
  return {dof_map_.data() + static_cast<std::size_t>(triangle) * nloc, static_cast<std::size_t>(nloc)};
}

std::vector<int> FESpace::boundary_scalar_dofs(std::span<const BoundaryTag> tags) const
{
  std::vector<int> dofs;
  const int nv = mesh_->n_vertices();
  for (const auto &be : mesh_->boundary_edges())
    {
      if (std::find(tags.begin(), tags.end(), be.tag) == tags.end())
        continue;
      dofs.push_back(be.v0);
      dofs.push_back(be.v1);
      if (degree_ == 2)
        dofs.push_back(nv + be.edge);
    }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

bool FESpace::fully_constrained() const
{
  return std::all_of(mesh_->boundary_edges().begin(), mesh_->boundary_edges().end(), [&](const BoundaryEdge &be) {
    return std::binary_search(dirichlet_tags_.begin(), dirichlet_tags_.end(), be.tag);
  });
}

std::uint64_t FESpace::signature() const
{
  Digest d;
  d.add(mesh_->signature()).add(degree_).add(components_).add(zero_mean_ ? 1 : 0);
  d.add(static_cast<int>(constrained_.size()));
  for (int g : constrained_)
    d.add(g);
  return d.value();
}

FEField::FEField(std::shared_ptr<const FESpace> s)
  : space(std::move(s))
  , coefficients(Eigen::VectorXd::Zero(space->n_dofs()))
{}

FEField::FEField(std::shared_ptr<const FESpace> s, Eigen::VectorXd c)
  : space(std::move(s))
  , coefficients(std::move(c))
{
  if (coefficients.size() != space->n_dofs())
    throw ValidationError("FEField: coefficient length " + std::to_string(coefficients.size()) +
                          " does not match space DOF count " + std::to_string(space->n_dofs()));
}

FieldValue eval_field(const FESpace               &space,
                      const Eigen::VectorXd       &coefficients,
                      int                          triangle,
                      const std::array<double, 3> &bary)
{
  const int n = space.local_size();
  std::array<double, 6>                phi{};
  std::array<std::array<double, 3>, 6> dphi{};
  shape_values(space.degree(), bary, phi);
  shape_bary_derivatives(space.degree(), bary, dphi);
  const ElementGeometry geo = element_geometry(space.mesh(), triangle);
  const auto            dofs = space.element_dofs(triangle);

  FieldValue out;
  for (int c = 0; c < space.components(); ++c)
    for (int i = 0; i < n; ++i)
      {
        const double coef = coefficients[c * space.n_scalar() + dofs[i]];
        out.value[c] += coef * phi[i];
        for (int m = 0; m < 3; ++m)
          for (int d = 0; d < 2; ++d)
            out.gradient[c][d] += coef * dphi[i][m] * geo.grad_lambda[m][d];
      }
  return out;
}

FieldValue eval_field(const FEField &field, int triangle, const std::array<double, 3> &bary)
{
  return eval_field(*field.space, field.coefficients, triangle, bary);
}

Eigen::VectorXd interpolate(const FESpace &space, const ScalarFunction &g)
{
  if (space.components() != 1)
    throw ValidationError("interpolate: scalar function on a vector space");
  Eigen::VectorXd c(space.n_dofs());
  for (int s = 0; s < space.n_scalar(); ++s)
    c[s] = g(space.node(s));
  return c;
}

Eigen::VectorXd interpolate(const FESpace &space, const VectorFunction &g)
{
  if (space.components() != 2)
    throw ValidationError("interpolate: vector function on a scalar space");
  const int       ns = space.n_scalar();
  Eigen::VectorXd c(space.n_dofs());
  for (int s = 0; s < ns; ++s)
    {
      const Vec2 v = g(space.node(s));
      c[s] = v[0];
      c[ns + s] = v[1];
    }
  return c;
}

ShapeTable::ShapeTable(int degree, int quadrature_degree)
  : n_local(nodes_per_element(degree))
  , rule(triangle_rule(quadrature_degree))
{
  values.resize(rule.size(), std::vector<double>(n_local));
  bary_derivs.resize(rule.size(), std::vector<std::array<double, 3>>(n_local));
  for (std::size_t q = 0; q < rule.size(); ++q)
    {
      shape_values(degree, rule.points[q], values[q]);
      shape_bary_derivatives(degree, rule.points[q], bary_derivs[q]);
    }
}

void ShapeTable::gradients(const ElementGeometry &geo, std::size_t q, std::span<Vec2> out) const
{
  for (int i = 0; i < n_local; ++i)
    {
      Vec2 g{0.0, 0.0};
      for (int m = 0; m < 3; ++m)
        {
          g[0] += bary_derivs[q][i][m] * geo.grad_lambda[m][0];
          g[1] += bary_derivs[q][i][m] * geo.grad_lambda[m][1];
        }
      out[i] = g;
    }
}

} // namespace podrom
