#include "podrom/metrics.hpp"

#include "podrom/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>

namespace podrom
{

double kinetic_energy(const Eigen::VectorXd &u, const SparseMatrix &mass)
{
  if (u.size() != mass.rows())
    throw ValidationError("kinetic_energy: field length does not match the mass matrix");
  return 0.5 * u.dot(mass * u);
}

DragLiftFields build_drag_lift_fields(const FESpace &velocity, const SparseMatrix &scalar_stiffness)
{
  const Mesh &mesh = velocity.mesh();
  if (!mesh.has_tag(BoundaryTag::obstacle))
    throw ValidationError("drag/lift: the mesh has no obstacle-tagged boundary");
  if (velocity.degree() != 2 || velocity.components() != 2)
    throw ValidationError("drag/lift: requires the vector P2 velocity space");

  const FESpace scalar(velocity.mesh_ptr(), 2, 1);
  const int     ns = scalar.n_scalar();
  if (scalar_stiffness.rows() != ns)
    throw ValidationError("drag/lift: scalar stiffness does not match the P2 space");

  const std::array<BoundaryTag, 4> all{BoundaryTag::inlet, BoundaryTag::outlet, BoundaryTag::wall, BoundaryTag::obstacle};
  const std::array<BoundaryTag, 1> obst{BoundaryTag::obstacle};
  std::vector<int>                 fixed_index(ns, -1);
  Eigen::VectorXd                  value = Eigen::VectorXd::Zero(ns);
  for (int s : scalar.boundary_scalar_dofs(all))
    fixed_index[s] = 0;
  for (int s : scalar.boundary_scalar_dofs(obst))
    value[s] = 1.0;

  std::vector<int> free_pos(ns, -1);
  int              nf = 0;
  for (int s = 0; s < ns; ++s)
    if (fixed_index[s] < 0)
      free_pos[s] = nf++;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd                     rhs = Eigen::VectorXd::Zero(nf);
  for (int k = 0; k < scalar_stiffness.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(scalar_stiffness, k); it; ++it)
      {
        const int i = free_pos[it.row()];
        if (i < 0)
          continue;
        const int j = free_pos[it.col()];
        if (j >= 0)
          trip.emplace_back(i, j, it.value());
        else
          rhs[i] -= it.value() * value[it.col()];
      }
  SparseMatrix Aff(nf, nf);
  Aff.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseMatrix> solver(Aff);
  if (solver.info() != Eigen::Success)
    throw SolverError("drag/lift: harmonic extension solve failed");
  const Eigen::VectorXd xf = solver.solve(rhs);

  Eigen::VectorXd v = value;
  for (int s = 0; s < ns; ++s)
    if (free_pos[s] >= 0)
      v[s] = xf[free_pos[s]];

  DragLiftFields f;
  f.v_D = Eigen::VectorXd::Zero(2 * ns);
  f.v_L = Eigen::VectorXd::Zero(2 * ns);
  f.v_D.head(ns) = v;
  f.v_L.tail(ns) = v;
  return f;
}

DragLift drag_lift(const FESpace         &velocity,
                   const FlowOperators   &ops,
                   const DragLiftFields  &fields,
                   const Eigen::VectorXd &u,
                   const Eigen::VectorXd &u_prev,
                   const Eigen::VectorXd &p,
                   double                 dt,
                   const DragLiftConfig  &cfg)
{
  if (!(dt > 0.0))
    throw ValidationError("drag_lift: dt must be positive");
  const double    scale = -2.0 / (cfg.D * cfg.U_bar * cfg.U_bar);
  const Eigen::VectorXd du = (u - u_prev) / dt;
  const Eigen::VectorXd conv = convection_residual(velocity, u, u);
  const Eigen::VectorXd Au = ops.stiffness * u;
  const Eigen::VectorXd Btp = ops.divergence.transpose() * p;
  auto eval = [&](const Eigen::VectorXd &v) {
    return scale * (v.dot(ops.mass * du) + conv.dot(v) + cfg.nu * Au.dot(v) - Btp.dot(v));
  };
  return {eval(fields.v_D), eval(fields.v_L)};
}

DragLift boundary_traction(const FESpace         &velocity,
                           const FESpace         &pressure,
                           const Eigen::VectorXd &u,
                           const Eigen::VectorXd &p,
                           const DragLiftConfig  &cfg)
{
  const Mesh &mesh = velocity.mesh();
  if (!mesh.has_tag(BoundaryTag::obstacle))
    throw ValidationError("boundary_traction: the mesh has no obstacle-tagged boundary");

  std::vector<int> edge_triangle(mesh.n_edges(), -1);
  for (int t = 0; t < mesh.n_triangles(); ++t)
    for (int e : mesh.triangle_edges()[t])
      edge_triangle[e] = t;

  std::vector<double> gx, gw;
  gauss_legendre_01(6, gx, gw);

  double fx = 0.0, fy = 0.0;
  for (const auto &be : mesh.boundary_edges())
    {
      if (be.tag != BoundaryTag::obstacle)
        continue;
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
      // v0 -> v1 runs counterclockwise around the fluid triangle, so the
      // right-hand normal points out of the fluid.
      const Vec2 n{(b.y - a.y) / len, -(b.x - a.x) / len};
      for (std::size_t q = 0; q < gx.size(); ++q)
        {
          std::array<double, 3> bary{0.0, 0.0, 0.0};
          bary[l0] = 1.0 - gx[q];
          bary[l1] = gx[q];
          const FieldValue uv = eval_field(velocity, u, t, bary);
          const FieldValue pv = eval_field(pressure, p, t, bary);
          const double     w = gw[q] * len;
          for (int c = 0; c < 2; ++c)
            {
              const double traction = cfg.nu * (uv.gradient[c][0] * n[0] + uv.gradient[c][1] * n[1]) - pv.value[0] * n[c];
              (c == 0 ? fx : fy) += w * traction;
            }
        }
    }
  const double scale = -2.0 / (cfg.D * cfg.U_bar * cfg.U_bar);
  return {scale * fx, scale * fy};
}

double weak_divergence(const SparseMatrix &divergence, const Eigen::VectorXd &u)
{
  if (u.size() != divergence.cols())
    throw ValidationError("weak_divergence: field length does not match the coupling matrix");
  const Eigen::VectorXd r = divergence * u;
  return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

L2TimeError discrete_l2_error(const std::vector<Eigen::VectorXd> &a,
                              const std::vector<Eigen::VectorXd> &b,
                              const SparseMatrix                 &mass,
                              double                              dt)
{
  if (a.size() != b.size())
    throw ValidationError("discrete_l2_error: trajectories have different lengths (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  L2TimeError e;
  for (std::size_t j = 0; j < a.size(); ++j)
    {
      if (a[j].size() != mass.rows() || b[j].size() != mass.rows())
        throw ValidationError("discrete_l2_error: field length does not match the mass matrix");
      const Eigen::VectorXd d = a[j] - b[j];
      e.sum += dt * d.dot(mass * d);
    }
  e.sum = std::max(e.sum, 0.0);
  e.root = std::sqrt(e.sum);
  return e;
}

namespace
{

template <typename Exact>
double l2_error_impl(const FESpace &space, const Eigen::VectorXd &u, int quad_degree, Exact &&exact)
{
  const QuadratureRule rule = triangle_rule(quad_degree);
  double               sum = 0.0;
  for (int t = 0; t < space.mesh().n_triangles(); ++t)
    {
      const ElementGeometry geo = element_geometry(space.mesh(), t);
      double                local = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q)
        {
          const FieldValue v = eval_field(space, u, t, rule.points[q]);
          const Vec2       g = exact(geo.map(rule.points[q]));
          double           d2 = 0.0;
          for (int c = 0; c < space.components(); ++c)
            d2 += (v.value[c] - g[c]) * (v.value[c] - g[c]);
          local += rule.weights[q] * d2;
        }
      sum += 2.0 * geo.area * local;
    }
  return std::sqrt(sum);
}

} // namespace

double l2_error(const FESpace &space, const Eigen::VectorXd &u, const VectorFunction &g, int quad_degree)
{
  if (space.components() != 2)
    throw ValidationError("l2_error: vector exact solution on a scalar space");
  return l2_error_impl(space, u, quad_degree, g);
}

double l2_error(const FESpace &space, const Eigen::VectorXd &u, const ScalarFunction &g, int quad_degree)
{
  if (space.components() != 1)
    throw ValidationError("l2_error: scalar exact solution on a vector space");
  return l2_error_impl(space, u, quad_degree, [&](const Point &p) { return Vec2{g(p), 0.0}; });
}

double triple_norm(const Eigen::VectorXd &Z,
                   const Eigen::MatrixXd &modes,
                   const SparseMatrix    &divergence,
                   const SparseMatrix    &stiffness,
                   const SparseMatrix    &s_pres)
{
  if (Z.size() != divergence.rows() || modes.rows() != divergence.cols())
    throw ValidationError("triple_norm: dimension mismatch");
  double sup = 0.0;
  if (modes.cols() > 0)
    {
      const Eigen::VectorXd g = modes.transpose() * (divergence.transpose() * Z);
      const Eigen::MatrixXd S = modes.transpose() * (stiffness * modes);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
      sup = std::sqrt(std::max(0.0, g.dot(ldlt.solve(g))));
    }
  double stab = 0.0;
  if (s_pres.size() > 0)
    stab = std::sqrt(std::max(0.0, Z.dot(s_pres * Z)));
  return sup + stab;
}

ErrorIndicator error_indicators(const SpectralDiagnostics &diag, double alpha, Scheme scheme)
{
  ErrorIndicator e;
  e.r = diag.r;
  const double base = diag.Sv_norm_full * diag.Lambda_r;
  if (scheme == Scheme::lps)
    {
      e.velocity = base + diag.Z_r;
      e.pressure = base + diag.Z_r;
    }
  else
    {
      e.velocity = base;
      e.pressure = alpha * diag.C_r_H1 * base + diag.Z_r;
    }
  return e;
}

double kendall_tau(const std::vector<double> &x, const std::vector<double> &y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("kendall_tau: need two samples of equal length >= 2");
  long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      {
        const double dx = x[i] - x[j];
        const double dy = y[i] - y[j];
        if (dx == 0.0 && dy == 0.0)
          continue;
        if (dx == 0.0)
          ++ties_x;
        else if (dy == 0.0)
          ++ties_y;
        else if ((dx > 0.0) == (dy > 0.0))
          ++concordant;
        else
          ++discordant;
      }
  const double n1 = static_cast<double>(concordant + discordant + ties_x);
  const double n2 = static_cast<double>(concordant + discordant + ties_y);
  if (n1 == 0.0 || n2 == 0.0)
    return 0.0;
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

} // namespace podrom
