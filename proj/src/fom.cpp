#include "podrom/fom.hpp"

#include "podrom/errors.hpp"

#include <cmath>

namespace podrom
{

namespace
{

constexpr double window_eps = 1e-9;

// Embeds blocks into a square system matrix of size rows.
class BlockBuilder
{
public:
  explicit BlockBuilder(int size)
    : size_(size)
  {}

  void add(const SparseMatrix &m, int row0, int col0, double scale = 1.0)
  {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        trip_.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
  }

  SparseMatrix build() const
  {
    SparseMatrix out(size_, size_);
    out.setFromTriplets(trip_.begin(), trip_.end());
    out.makeCompressed();
    return out;
  }

private:
  int                                 size_;
  std::vector<Eigen::Triplet<double>> trip_;
};

Vec2 eval_or_zero(const SpaceTimeVector &f, const Point &p, double t)
{
  return f ? f(p, t) : Vec2{0.0, 0.0};
}

} // namespace

std::string to_string(Scheme s)
{
  return s == Scheme::lps ? "lps" : "graddiv";
}

std::string to_string(TimeIntegrator t)
{
  return t == TimeIntegrator::implicit_euler ? "implicit_euler" : "bdf2_semi_implicit";
}

Scheme scheme_from_string(const std::string &s)
{
  if (s == "lps")
    return Scheme::lps;
  if (s == "graddiv")
    return Scheme::graddiv;
  throw ValidationError("unknown scheme '" + s + "' (expected lps or graddiv)");
}

TimeIntegrator integrator_from_string(const std::string &s)
{
  if (s == "implicit_euler")
    return TimeIntegrator::implicit_euler;
  if (s == "bdf2_semi_implicit" || s == "bdf2")
    return TimeIntegrator::bdf2_semi_implicit;
  throw ValidationError("unknown time integrator '" + s + "' (expected implicit_euler or bdf2_semi_implicit)");
}

int SnapshotWindow::first_step(double dt) const
{
  return static_cast<int>(std::ceil(t_start / dt - window_eps));
}

int SnapshotWindow::last_step(double dt) const
{
  return static_cast<int>(std::floor(t_end / dt + window_eps));
}

int SnapshotWindow::count(double dt) const
{
  const int n0 = first_step(dt);
  const int n1 = last_step(dt);
  if (n1 < n0)
    return 0;
  return (n1 - n0) / stride + 1;
}

bool SnapshotWindow::records(int step, double dt) const
{
  const int n0 = first_step(dt);
  return step >= n0 && step <= last_step(dt) && (step - n0) % stride == 0;
}

void FOMConfig::validate() const
{
  if (!(dt > 0.0))
    throw ValidationError("fom: dt must be positive");
  if (!(nu > 0.0))
    throw ValidationError("fom: nu must be positive");
  if (!(t_final > 0.0))
    throw ValidationError("fom: t_final must be positive");
  stabilization.validate();
  if (scheme == Scheme::graddiv && !(stabilization.mu > 0.0))
    throw ValidationError("fom: grad-div scheme requires mu > 0");
  if (scheme == Scheme::lps && !(stabilization.C_v > 0.0 && stabilization.C_p > 0.0))
    throw ValidationError("fom: LPS scheme requires C_v > 0 and C_p > 0");
  if (nonlinear.max_iterations < 1 || !(nonlinear.tolerance > 0.0))
    throw ValidationError("fom: nonlinear tolerance must be positive and max_iterations >= 1");
  if (window.stride < 1)
    throw ValidationError("fom: snapshot stride must be >= 1");
  if (window.t_start < 0.0 || window.t_end < window.t_start || window.t_end > t_final + window_eps * dt)
    throw ValidationError("fom: snapshot window must satisfy 0 <= t_start <= t_end <= t_final");
}

int FOMConfig::n_steps() const
{
  return static_cast<int>(std::llround(t_final / dt));
}

FlowSpaces make_flow_spaces(std::shared_ptr<const Mesh> mesh, Scheme scheme, const std::vector<BoundaryTag> &dirichlet_tags)
{
  FlowSpaces s;
  auto       vel = std::make_shared<const FESpace>(mesh, 2, 2, dirichlet_tags);
  const bool zero_mean = vel->fully_constrained();
  s.velocity = vel;
  s.pressure = std::make_shared<const FESpace>(mesh, scheme == Scheme::lps ? 2 : 1, 1, std::vector<BoundaryTag>{}, zero_mean);
  return s;
}

FlowOperators assemble_flow_operators(const FlowSpaces &spaces, Scheme scheme, const StabilizationConfig &stab)
{
  FlowOperators ops;
  ops.mass = assemble_mass(*spaces.velocity);
  ops.stiffness = assemble_stiffness(*spaces.velocity);
  ops.divergence = assemble_divergence(*spaces.velocity, *spaces.pressure);
  ops.grad_div_unit = assemble_grad_div(*spaces.velocity, 1.0);
  ops.pressure_mass = assemble_mass(*spaces.pressure);
  const FESpace scalar(spaces.velocity->mesh_ptr(), 2, 1);
  ops.scalar_stiffness = assemble_stiffness(scalar);
  if (scheme == Scheme::lps)
    {
      auto lps = assemble_lps_matrices(*spaces.velocity, *spaces.pressure, stab);
      ops.S_h = std::move(lps.S_h);
      ops.s_pres = std::move(lps.s_pres);
    }
  return ops;
}

Eigen::VectorXd bdf2_extrapolate(const Eigen::VectorXd &u_n, const Eigen::VectorXd &u_nm1)
{
  if (u_n.size() != u_nm1.size())
    throw ValidationError("bdf2_extrapolate: history lengths differ");
  return 2.0 * u_n - u_nm1;
}

FullOrderModel::FullOrderModel(std::shared_ptr<const Mesh> mesh, FOMConfig cfg, FlowProblem problem)
  : cfg_(std::move(cfg))
  , problem_(std::move(problem))
{
  cfg_.validate();
  spaces_ = make_flow_spaces(std::move(mesh), cfg_.scheme, problem_.dirichlet_tags);
  ops_ = assemble_flow_operators(spaces_, cfg_.scheme, cfg_.stabilization);

  const int    nu_dofs = velocity_space().n_dofs();
  const int    np_dofs = pressure_space().n_dofs();
  const double c = cfg_.time_integrator == TimeIntegrator::bdf2_semi_implicit ? 1.5 / cfg_.dt : 1.0 / cfg_.dt;

  BlockBuilder b(nu_dofs + np_dofs);
  b.add(ops_.mass, 0, 0, c);
  b.add(ops_.stiffness, 0, 0, cfg_.nu);
  if (cfg_.stabilization.mu > 0.0)
    b.add(ops_.grad_div_unit, 0, 0, cfg_.stabilization.mu);
  const SparseMatrix Bt = ops_.divergence.transpose();
  b.add(Bt, 0, nu_dofs, -1.0);
  b.add(ops_.divergence, nu_dofs, 0, 1.0);
  if (cfg_.scheme == Scheme::lps)
    {
      b.add(ops_.S_h, 0, 0);
      b.add(ops_.s_pres, nu_dofs, nu_dofs);
    }
  // Structural zeros on the pressure diagonal keep the pattern fixed when a
  // pressure DOF is pinned.
  SparseMatrix zero_diag(np_dofs, np_dofs);
  zero_diag.setIdentity();
  b.add(zero_diag, nu_dofs, nu_dofs, 0.0);
  constant_part_ = b.build();
}

SparseMatrix FullOrderModel::system_matrix(double time_coefficient, const Eigen::VectorXd &convecting) const
{
  const int    n = constant_part_.rows();
  BlockBuilder b(n);
  b.add(constant_part_, 0, 0);
  const double c0 = cfg_.time_integrator == TimeIntegrator::bdf2_semi_implicit ? 1.5 / cfg_.dt : 1.0 / cfg_.dt;
  if (time_coefficient != c0)
    b.add(ops_.mass, 0, 0, time_coefficient - c0);
  b.add(assemble_convection(velocity_space(), convecting), 0, 0);
  return b.build();
}

Eigen::VectorXd FullOrderModel::load(double t) const
{
  if (!problem_.forcing)
    return Eigen::VectorXd::Zero(velocity_space().n_dofs());
  return assemble_load(velocity_space(), [&](const Point &p) { return problem_.forcing(p, t); });
}

Eigen::VectorXd FullOrderModel::boundary_velocity(double t) const
{
  const FESpace  &V = velocity_space();
  const int       ns = V.n_scalar();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(V.n_dofs());
  for (int s : V.boundary_scalar_dofs(V.dirichlet_tags()))
    {
      const Vec2 v = eval_or_zero(problem_.boundary_velocity, V.node(s), t);
      g[s] = v[0];
      g[ns + s] = v[1];
    }
  return g;
}

DirichletData FullOrderModel::dirichlet_data(double t) const
{
  const Eigen::VectorXd g = boundary_velocity(t);
  DirichletData         data;
  for (int d : velocity_space().constrained_dofs())
    {
      data.dofs.push_back(d);
      data.values.push_back(g[d]);
    }
  if (pressure_space().zero_mean())
    {
      data.dofs.push_back(velocity_space().n_dofs());
      data.values.push_back(0.0);
    }
  return data;
}

void FullOrderModel::normalize_pressure(Eigen::VectorXd &p) const
{
  if (!pressure_space().zero_mean())
    return;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p.size());
  const double          area = pressure_space().mesh().total_area();
  const double          mean = ones.dot(ops_.pressure_mass * p) / area;
  p -= mean * ones;
}

FOMState FullOrderModel::initial_state() const
{
  FOMState s;
  const FESpace &V = velocity_space();
  s.u = problem_.initial_velocity ? interpolate(V, problem_.initial_velocity) : Eigen::VectorXd::Zero(V.n_dofs());
  const Eigen::VectorXd g = boundary_velocity(0.0);
  for (int d : V.constrained_dofs())
    s.u[d] = g[d];
  s.u_prev = s.u;
  s.p = Eigen::VectorXd::Zero(pressure_space().n_dofs());
  return s;
}

Eigen::VectorXd FullOrderModel::solve(SparseMatrix K, Eigen::VectorXd rhs, double t_new, double &residual)
{
  apply_dirichlet(K, rhs, dirichlet_data(t_new));
  if (!pattern_analyzed_)
    {
      lu_.analyzePattern(K);
      pattern_analyzed_ = true;
    }
  lu_.factorize(K);
  if (lu_.info() != Eigen::Success)
    throw SolverError("fom: sparse factorization failed at t = " + std::to_string(t_new));
  Eigen::VectorXd x = lu_.solve(rhs);
  const double    norm = std::max(rhs.norm(), 1e-300);
  residual = (K * x - rhs).norm() / norm;
  if (!std::isfinite(residual) || residual > 1e-8)
    throw SolverError("fom: linear solve residual " + std::to_string(residual) + " at t = " + std::to_string(t_new));
  return x;
}

StepReport FullOrderModel::advance(FOMState &state)
{
  const int       nu_dofs = velocity_space().n_dofs();
  const int       np_dofs = pressure_space().n_dofs();
  const double    t_new = state.t + cfg_.dt;
  const auto     &M = ops_.mass;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu_dofs + np_dofs);
  const Eigen::VectorXd f = load(t_new);
  StepReport      report;
  Eigen::VectorXd x;

  if (cfg_.time_integrator == TimeIntegrator::bdf2_semi_implicit)
    {
      rhs.head(nu_dofs) = M * (4.0 * state.u - state.u_prev) / (2.0 * cfg_.dt) + f;
      const Eigen::VectorXd w = bdf2_extrapolate(state.u, state.u_prev);
      x = solve(system_matrix(1.5 / cfg_.dt, w), rhs, t_new, report.linear_residual);
      report.picard_iterations = 0;
    }
  else
    {
      rhs.head(nu_dofs) = M * state.u / cfg_.dt + f;
      Eigen::VectorXd w = state.u;
      bool            converged = false;
      double          change = 0.0;
      for (int it = 1; it <= cfg_.nonlinear.max_iterations; ++it)
        {
          x = solve(system_matrix(1.0 / cfg_.dt, w), rhs, t_new, report.linear_residual);
          const Eigen::VectorXd u_new = x.head(nu_dofs);
          change = (u_new - w).norm();
          report.picard_iterations = it;
          w = u_new;
          if (change <= cfg_.nonlinear.tolerance * std::max(1.0, u_new.norm()))
            {
              converged = true;
              break;
            }
        }
      if (!converged)
        throw SolverError("fom: Picard iteration did not converge at t = " + std::to_string(t_new) + " after " +
                          std::to_string(cfg_.nonlinear.max_iterations) + " iterations (last change " +
                          std::to_string(change) + ")");
    }

  state.u_prev = state.u;
  state.u = x.head(nu_dofs);
  state.p = x.tail(np_dofs);
  normalize_pressure(state.p);
  state.t = t_new;
  ++state.step;
  if (!state.u.allFinite() || !state.p.allFinite())
    throw SolverError("fom: non-finite solution at t = " + std::to_string(t_new));
  return report;
}

StepReport FullOrderModel::step(FOMState &state)
{
  return advance(state);
}

StepReport FullOrderModel::step_lps_fem(FOMState &state)
{
  if (cfg_.scheme != Scheme::lps)
    throw ValidationError("step_lps_fem: model is configured for the grad-div scheme");
  return advance(state);
}

StepReport FullOrderModel::step_graddiv_fem(FOMState &state)
{
  if (cfg_.scheme != Scheme::graddiv)
    throw ValidationError("step_graddiv_fem: model is configured for the LPS scheme");
  return advance(state);
}

} // namespace podrom
