#include "podrom/assembly.hpp"

#include "podrom/errors.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace podrom
{

namespace
{

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(int rows, int cols, const Triplets &t)
{
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// Scalar bilinear form assembled from a per-element local matrix callback.
template <typename Local>
SparseMatrix assemble_scalar(const FESpace &space, int quad_degree, Local &&local)
{
  const ShapeTable table(space.degree(), quad_degree);
  const int        n = table.n_local;
  Triplets         trip;
  trip.reserve(static_cast<std::size_t>(space.mesh().n_triangles()) * n * n);
  std::vector<Vec2>   grads(n);
  Eigen::MatrixXd     K(n, n);
  for (int t = 0; t < space.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(space.mesh(), t);
      K.setZero();
      for (std::size_t q = 0; q < table.rule.size(); ++q)
        {
          table.gradients(geo, q, grads);
          const double w = 2.0 * geo.area * table.rule.weights[q];
          local(K, table.values[q], grads, w);
        }
      const auto dofs = space.element_dofs(t);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          trip.emplace_back(dofs[i], dofs[j], K(i, j));
    }
  return from_triplets(space.n_scalar(), space.n_scalar(), trip);
}

// Fields are evaluated through the tabulated shape data to avoid the
// per-point geometry recomputation of eval_field.
struct LocalField
{
  Vec2 value{0.0, 0.0};
  Mat2 grad{};
  double div() const { return grad[0][0] + grad[1][1]; }
};

LocalField local_field(const FESpace            &space,
                       const Eigen::VectorXd    &c,
                       std::span<const int>      dofs,
                       const std::vector<double> &phi,
                       std::span<const Vec2>     grads)
{
  LocalField f;
  const int  ns = space.n_scalar();
  for (int comp = 0; comp < space.components(); ++comp)
    for (std::size_t i = 0; i < dofs.size(); ++i)
      {
        const double a = c[comp * ns + dofs[i]];
        f.value[comp] += a * phi[i];
        f.grad[comp][0] += a * grads[i][0];
        f.grad[comp][1] += a * grads[i][1];
      }
  return f;
}

void require_vector(const FESpace &space, const char *what)
{
  if (space.components() != 2)
    throw ValidationError(std::string(what) + ": requires a vector space");
}

void require_length(const FESpace &space, const Eigen::VectorXd &v, const char *what)
{
  if (v.size() != space.n_dofs())
    throw ValidationError(std::string(what) + ": vector length " + std::to_string(v.size()) +
                          " does not match space DOF count " + std::to_string(space.n_dofs()));
}

} // namespace

void StabilizationConfig::validate() const
{
  if (!(C_v >= 0.0) || !(C_p >= 0.0))
    throw ValidationError("stabilization: C_v and C_p must be nonnegative");
  if (!(mu >= 0.0))
    throw ValidationError("stabilization: mu must be nonnegative");
  if (projection_degree != 1)
    throw ValidationError("stabilization: only projection degree 1 (P2 fields) is supported");
}

SparseMatrix block_diagonal(const SparseMatrix &block, int copies)
{
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(block.nonZeros()) * copies);
  for (int c = 0; c < copies; ++c)
    for (int k = 0; k < block.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(block, k); it; ++it)
        trip.emplace_back(c * block.rows() + it.row(), c * block.cols() + it.col(), it.value());
  return from_triplets(copies * block.rows(), copies * block.cols(), trip);
}

SparseMatrix assemble_mass(const FESpace &space, QuadratureOptions q)
{
  const int  n = space.local_size();
  const auto scalar = assemble_scalar(space, 2 * space.degree() + q.extra,
                                      [n](Eigen::MatrixXd &K, const std::vector<double> &phi, std::span<const Vec2>, double w) {
                                        for (int i = 0; i < n; ++i)
                                          for (int j = 0; j < n; ++j)
                                            K(i, j) += w * phi[i] * phi[j];
                                      });
  return space.components() == 1 ? scalar : block_diagonal(scalar, space.components());
}

SparseMatrix assemble_stiffness(const FESpace &space, QuadratureOptions q)
{
  const int  n = space.local_size();
  const auto scalar = assemble_scalar(space, 2 * space.degree() + q.extra,
                                      [n](Eigen::MatrixXd &K, const std::vector<double> &, std::span<const Vec2> g, double w) {
                                        for (int i = 0; i < n; ++i)
                                          for (int j = 0; j < n; ++j)
                                            K(i, j) += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                                      });
  return space.components() == 1 ? scalar : block_diagonal(scalar, space.components());
}

SparseMatrix assemble_divergence(const FESpace &vel, const FESpace &pres, QuadratureOptions q)
{
  require_vector(vel, "assemble_divergence");
  if (pres.components() != 1)
    throw ValidationError("assemble_divergence: pressure space must be scalar");
  if (vel.mesh().signature() != pres.mesh().signature())
    throw ValidationError("assemble_divergence: velocity and pressure meshes differ");

  const ShapeTable tv(vel.degree(), 2 * vel.degree() + q.extra);
  const ShapeTable tp(pres.degree(), 2 * vel.degree() + q.extra);
  const int        nv = tv.n_local;
  const int        np = tp.n_local;
  const int        ns = vel.n_scalar();
  Triplets         trip;
  std::vector<Vec2> grads(nv);
  Eigen::MatrixXd   Kx(np, nv), Ky(np, nv);
  for (int t = 0; t < vel.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(vel.mesh(), t);
      Kx.setZero();
      Ky.setZero();
      for (std::size_t qp = 0; qp < tv.rule.size(); ++qp)
        {
          tv.gradients(geo, qp, grads);
          const double w = 2.0 * geo.area * tv.rule.weights[qp];
          for (int k = 0; k < np; ++k)
            for (int j = 0; j < nv; ++j)
              {
                Kx(k, j) += w * tp.values[qp][k] * grads[j][0];
                Ky(k, j) += w * tp.values[qp][k] * grads[j][1];
              }
        }
      const auto vd = vel.element_dofs(t);
      const auto pd = pres.element_dofs(t);
      for (int k = 0; k < np; ++k)
        for (int j = 0; j < nv; ++j)
          {
            trip.emplace_back(pd[k], vd[j], Kx(k, j));
            trip.emplace_back(pd[k], ns + vd[j], Ky(k, j));
          }
    }
  return from_triplets(pres.n_dofs(), vel.n_dofs(), trip);
}

SparseMatrix assemble_grad_div(const FESpace &space, double mu, QuadratureOptions q)
{
  require_vector(space, "assemble_grad_div");
  if (!(mu > 0.0))
    throw ValidationError("assemble_grad_div: mu must be positive, got " + std::to_string(mu));

  const ShapeTable  table(space.degree(), 2 * space.degree() + q.extra);
  const int         n = table.n_local;
  const int         ns = space.n_scalar();
  Triplets          trip;
  std::vector<Vec2> grads(n);
  Eigen::MatrixXd   K(2 * n, 2 * n);
  for (int t = 0; t < space.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(space.mesh(), t);
      K.setZero();
      for (std::size_t qp = 0; qp < table.rule.size(); ++qp)
        {
          table.gradients(geo, qp, grads);
          const double w = mu * 2.0 * geo.area * table.rule.weights[qp];
          // local index c*n + i has divergence grads[i][c]
          for (int a = 0; a < 2 * n; ++a)
            for (int b = 0; b < 2 * n; ++b)
              K(a, b) += w * grads[a % n][a / n] * grads[b % n][b / n];
        }
      const auto dofs = space.element_dofs(t);
      for (int a = 0; a < 2 * n; ++a)
        for (int b = 0; b < 2 * n; ++b)
          trip.emplace_back((a / n) * ns + dofs[a % n], (b / n) * ns + dofs[b % n], K(a, b));
    }
  return from_triplets(space.n_dofs(), space.n_dofs(), trip);
}

SparseMatrix assemble_convection(const FESpace &space, const Eigen::VectorXd &w, QuadratureOptions q)
{
  require_vector(space, "assemble_convection");
  require_length(space, w, "assemble_convection");

  const ShapeTable  table(space.degree(), 3 * space.degree() + q.extra);
  const int         n = table.n_local;
  Triplets          trip;
  trip.reserve(static_cast<std::size_t>(space.mesh().n_triangles()) * n * n);
  std::vector<Vec2> grads(n);
  Eigen::MatrixXd   K(n, n);
  for (int t = 0; t < space.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(space.mesh(), t);
      const auto            dofs = space.element_dofs(t);
      K.setZero();
      for (std::size_t qp = 0; qp < table.rule.size(); ++qp)
        {
          table.gradients(geo, qp, grads);
          const LocalField f = local_field(space, w, dofs, table.values[qp], grads);
          const double     wt = 2.0 * geo.area * table.rule.weights[qp];
          const double     half_div = 0.5 * f.div();
          const auto      &phi = table.values[qp];
          for (int j = 0; j < n; ++j)
            {
              const double adv = f.value[0] * grads[j][0] + f.value[1] * grads[j][1] + half_div * phi[j];
              for (int i = 0; i < n; ++i)
                K(i, j) += wt * adv * phi[i];
            }
        }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          trip.emplace_back(dofs[i], dofs[j], K(i, j));
    }
  return block_diagonal(from_triplets(space.n_scalar(), space.n_scalar(), trip), 2);
}

double apply_convection(const FESpace         &space,
                        const Eigen::VectorXd &u,
                        const Eigen::VectorXd &v,
                        const Eigen::VectorXd &w,
                        QuadratureOptions      q)
{
  require_vector(space, "apply_convection");
  require_length(space, u, "apply_convection");
  require_length(space, v, "apply_convection");
  require_length(space, w, "apply_convection");

  const ShapeTable  table(space.degree(), 3 * space.degree() + q.extra);
  std::vector<Vec2> grads(table.n_local);
  double            sum = 0.0;
  for (int t = 0; t < space.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(space.mesh(), t);
      const auto            dofs = space.element_dofs(t);
      double                local = 0.0;
      for (std::size_t qp = 0; qp < table.rule.size(); ++qp)
        {
          table.gradients(geo, qp, grads);
          const LocalField fu = local_field(space, u, dofs, table.values[qp], grads);
          const LocalField fv = local_field(space, v, dofs, table.values[qp], grads);
          const LocalField fw = local_field(space, w, dofs, table.values[qp], grads);
          double           val = 0.0;
          for (int c = 0; c < 2; ++c)
            {
              const double adv = fu.value[0] * fv.grad[c][0] + fu.value[1] * fv.grad[c][1];
              val += (adv + 0.5 * fu.div() * fv.value[c]) * fw.value[c];
            }
          local += table.rule.weights[qp] * val;
        }
      sum += 2.0 * geo.area * local;
    }
  return sum;
}

Eigen::VectorXd convection_residual(const FESpace         &space,
                                    const Eigen::VectorXd &u,
                                    const Eigen::VectorXd &v,
                                    QuadratureOptions      q)
{
  require_vector(space, "convection_residual");
  require_length(space, u, "convection_residual");
  require_length(space, v, "convection_residual");

  const ShapeTable  table(space.degree(), 3 * space.degree() + q.extra);
  const int         n = table.n_local;
  const int         ns = space.n_scalar();
  std::vector<Vec2> grads(n);
  Eigen::VectorXd   r = Eigen::VectorXd::Zero(space.n_dofs());
  for (int t = 0; t < space.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(space.mesh(), t);
      const auto            dofs = space.element_dofs(t);
      for (std::size_t qp = 0; qp < table.rule.size(); ++qp)
        {
          table.gradients(geo, qp, grads);
          const LocalField fu = local_field(space, u, dofs, table.values[qp], grads);
          const LocalField fv = local_field(space, v, dofs, table.values[qp], grads);
          const double     wt = 2.0 * geo.area * table.rule.weights[qp];
          for (int c = 0; c < 2; ++c)
            {
              const double val = fu.value[0] * fv.grad[c][0] + fu.value[1] * fv.grad[c][1] + 0.5 * fu.div() * fv.value[c];
              for (int i = 0; i < n; ++i)
                r[c * ns + dofs[i]] += wt * val * table.values[qp][i];
            }
        }
    }
  return r;
}

LpsProjector assemble_lps_fluctuation(const FESpace &space)
{
  if (space.components() != 1 || space.degree() != 2)
    throw ValidationError("assemble_lps_fluctuation: requires a scalar P2 space");

  const Mesh &mesh = space.mesh();
  const int   nt = mesh.n_triangles();
  const int   nv = mesh.n_vertices();
  const int   dg = 6 * nt;

  Triplets                             tg, ta, tr;
  std::array<std::array<double, 3>, 6> dphi{};
  std::vector<double>                  patch_area(nv, 0.0);
  for (int t = 0; t < nt; ++t)
    for (int v : mesh.triangles()[t])
      patch_area[v] += mesh.area(t);

  for (int t = 0; t < nt; ++t)
    {
      const ElementGeometry geo = element_geometry(mesh, t);
      const auto            dofs = space.element_dofs(t);
      for (int m = 0; m < 3; ++m)
        {
          std::array<double, 3> bary{0.0, 0.0, 0.0};
          bary[m] = 1.0;
          shape_bary_derivatives(2, bary, dphi);
          const int vertex = mesh.triangles()[t][m];
          for (int d = 0; d < 2; ++d)
            {
              const int row = 3 * (2 * t + d) + m;
              for (int i = 0; i < 6; ++i)
                {
                  double g = 0.0;
                  for (int k = 0; k < 3; ++k)
                    g += dphi[i][k] * geo.grad_lambda[k][d];
                  if (g != 0.0)
                    tg.emplace_back(row, dofs[i], g);
                }
              ta.emplace_back(d * nv + vertex, row, mesh.area(t) / patch_area[vertex]);
              tr.emplace_back(row, d * nv + vertex, 1.0);
            }
        }
    }

  LpsProjector p;
  p.gradient = from_triplets(dg, space.n_dofs(), tg);
  p.average = from_triplets(2 * nv, dg, ta);
  p.restriction = from_triplets(dg, 2 * nv, tr);
  SparseMatrix id(dg, dg);
  id.setIdentity();
  p.complement = id - SparseMatrix(p.restriction * p.average);
  p.complement.prune(0.0);
  p.fluctuation = p.complement * p.gradient;
  p.fluctuation.prune(0.0);
  return p;
}

SparseMatrix dg_weighted_mass(const Mesh &mesh, double C)
{
  Triplets trip;
  for (int t = 0; t < mesh.n_triangles(); ++t)
    {
      const double s = C * mesh.h_K()[t] * mesh.area(t) / 12.0;
      for (int d = 0; d < 2; ++d)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            trip.emplace_back(3 * (2 * t + d) + i, 3 * (2 * t + d) + j, s * (i == j ? 2.0 : 1.0));
    }
  return from_triplets(6 * mesh.n_triangles(), 6 * mesh.n_triangles(), trip);
}

SparseMatrix assemble_lps_scalar(const FESpace &space, double C)
{
  const LpsProjector p = assemble_lps_fluctuation(space);
  const SparseMatrix W = dg_weighted_mass(space.mesh(), C);
  SparseMatrix       S = SparseMatrix(p.fluctuation.transpose()) * (W * p.fluctuation);
  // Exact symmetry: average with the transpose to remove round-off asymmetry.
  S = 0.5 * (S + SparseMatrix(S.transpose()));
  S.makeCompressed();
  return S;
}

LpsMatrices assemble_lps_matrices(const FESpace &vel, const FESpace &pres, const StabilizationConfig &cfg)
{
  cfg.validate();
  require_vector(vel, "assemble_lps_matrices");
  if (vel.degree() != 2 || pres.degree() != 2 || pres.components() != 1)
    throw ValidationError("assemble_lps_matrices: LPS requires P2 velocity and P2 pressure");

  const FESpace scalar(vel.mesh_ptr(), 2, 1);
  LpsMatrices   out;
  out.S_h = block_diagonal(assemble_lps_scalar(scalar, cfg.C_v), 2);
  out.s_pres = assemble_lps_scalar(pres, cfg.C_p);
  return out;
}

namespace
{

template <typename Eval>
Eigen::VectorXd assemble_load_impl(const FESpace &space, int quad_degree, Eval &&eval)
{
  const ShapeTable table(space.degree(), quad_degree);
  const int        n = table.n_local;
  const int        ns = space.n_scalar();
  Eigen::VectorXd  b = Eigen::VectorXd::Zero(space.n_dofs());
  for (int t = 0; t < space.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(space.mesh(), t);
      const auto            dofs = space.element_dofs(t);
      for (std::size_t qp = 0; qp < table.rule.size(); ++qp)
        {
          const Vec2   f = eval(geo.map(table.rule.points[qp]));
          const double w = 2.0 * geo.area * table.rule.weights[qp];
          for (int c = 0; c < space.components(); ++c)
            for (int i = 0; i < n; ++i)
              b[c * ns + dofs[i]] += w * f[c] * table.values[qp][i];
        }
    }
  return b;
}

} // namespace

Eigen::VectorXd assemble_load(const FESpace &space, const VectorFunction &f, QuadratureOptions q)
{
  require_vector(space, "assemble_load");
  return assemble_load_impl(space, 2 * space.degree() + 2 + q.extra, f);
}

Eigen::VectorXd assemble_load(const FESpace &space, const ScalarFunction &f, QuadratureOptions q)
{
  if (space.components() != 1)
    throw ValidationError("assemble_load: scalar load on a vector space");
  return assemble_load_impl(space, 2 * space.degree() + 2 + q.extra, [&](const Point &p) { return Vec2{f(p), 0.0}; });
}

void write_matrix_market(const SparseMatrix &m, std::ostream &out)
{
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

SparseMatrix read_matrix_market(std::istream &in)
{
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw ValidationError("read_matrix_market: missing header");
  while (std::getline(in, line) && !line.empty() && line[0] == '%')
    ;
  std::istringstream head(line);
  long               rows = 0, cols = 0, nnz = 0;
  if (!(head >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
    throw ValidationError("read_matrix_market: bad size line");
  Triplets trip;
  trip.reserve(nnz);
  for (long k = 0; k < nnz; ++k)
    {
      long   i = 0, j = 0;
      double v = 0.0;
      if (!(in >> i >> j >> v) || i < 1 || j < 1 || i > rows || j > cols)
        throw ValidationError("read_matrix_market: bad entry " + std::to_string(k));
      trip.emplace_back(i - 1, j - 1, v);
    }
  return from_triplets(static_cast<int>(rows), static_cast<int>(cols), trip);
}

} // namespace podrom
