#pragma once

#include "podrom/assembly.hpp"
#include "podrom/constraints.hpp"

#include <Eigen/UmfPackSupport>

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace podrom
{

enum class Scheme
{
  lps,
  graddiv
};

enum class TimeIntegrator
{
  implicit_euler,
  bdf2_semi_implicit
};

std::string    to_string(Scheme s);
std::string    to_string(TimeIntegrator t);
Scheme         scheme_from_string(const std::string &s);
TimeIntegrator integrator_from_string(const std::string &s);

struct NonlinearConfig
{
  double tolerance = 1e-10;
  int    max_iterations = 50;
};

/// Snapshot window [t_start, t_end] sampled every `stride` steps.
struct SnapshotWindow
{
  double t_start = 0.0;
  double t_end = 0.0;
  int    stride = 1;

  /// First and last recorded step indices for a step size dt.
  int first_step(double dt) const;
  int last_step(double dt) const;
  /// Number of recorded snapshots.
  int count(double dt) const;
  bool records(int step, double dt) const;
};

struct FOMConfig
{
  Scheme              scheme = Scheme::graddiv;
  double              nu = 1e-3;
  double              dt = 2e-3;
  double              t_final = 1.0;
  StabilizationConfig stabilization;
  TimeIntegrator      time_integrator = TimeIntegrator::bdf2_semi_implicit;
  NonlinearConfig     nonlinear;
  SnapshotWindow      window;

  void validate() const;
  int  n_steps() const;
};

using SpaceTimeVector = std::function<Vec2(const Point &, double)>;

/// Data of an incompressible flow problem. Unset functions mean zero.
struct FlowProblem
{
  std::vector<BoundaryTag> dirichlet_tags;
  SpaceTimeVector          boundary_velocity;
  SpaceTimeVector          forcing;
  VectorFunction           initial_velocity;
};

/// Velocity/pressure pair of spaces for a scheme: P2/P2 (LPS) or P2/P1
/// (grad-div). The pressure space carries the zero-mean flag when every
/// boundary edge is Dirichlet.
struct FlowSpaces
{
  std::shared_ptr<const FESpace> velocity;
  std::shared_ptr<const FESpace> pressure;
};

FlowSpaces make_flow_spaces(std::shared_ptr<const Mesh> mesh, Scheme scheme, const std::vector<BoundaryTag> &dirichlet_tags);

/// Assembled full-order operators on a pair of spaces.
struct FlowOperators
{
  SparseMatrix mass;            ///< velocity mass
  SparseMatrix stiffness;       ///< velocity stiffness
  SparseMatrix divergence;      ///< B[q][v] = (q, div v)
  SparseMatrix grad_div_unit;   ///< (div u, div v)
  SparseMatrix S_h;             ///< LPS velocity (empty for grad-div)
  SparseMatrix s_pres;          ///< LPS pressure (empty for grad-div)
  SparseMatrix pressure_mass;
  SparseMatrix scalar_stiffness; ///< scalar P2 stiffness, used for harmonic extensions
};

FlowOperators assemble_flow_operators(const FlowSpaces &spaces, Scheme scheme, const StabilizationConfig &stab);

struct FOMState
{
  Eigen::VectorXd u;
  Eigen::VectorXd u_prev; ///< velocity one step back (equals u at the start)
  Eigen::VectorXd p;
  double          t = 0.0;
  int             step = 0;
};

/// u_hat = 2 u^n - u^{n-1}; with u^{-1} = u^0 this is u^0 at the first step.
Eigen::VectorXd bdf2_extrapolate(const Eigen::VectorXd &u_n, const Eigen::VectorXd &u_nm1);

struct StepReport
{
  int    picard_iterations = 0;
  double linear_residual = 0.0; ///< relative residual of the last linear solve
};

/// Stabilized full-order solver for either scheme.
class FullOrderModel
{
public:
  FullOrderModel(std::shared_ptr<const Mesh> mesh, FOMConfig cfg, FlowProblem problem);

  const FOMConfig     &config() const { return cfg_; }
  const FlowProblem   &problem() const { return problem_; }
  const FlowSpaces    &spaces() const { return spaces_; }
  const FlowOperators &operators() const { return ops_; }
  const FESpace       &velocity_space() const { return *spaces_.velocity; }
  const FESpace       &pressure_space() const { return *spaces_.pressure; }

  /// Initial velocity interpolated, Dirichlet values imposed at t = 0.
  FOMState initial_state() const;

  /// Advances one step with the configured integrator.
  StepReport step(FOMState &state);

  /// One LPS step (requires scheme lps).
  StepReport step_lps_fem(FOMState &state);
  /// One grad-div step (requires scheme graddiv).
  StepReport step_graddiv_fem(FOMState &state);

  /// Load vector (f(t), phi_i).
  Eigen::VectorXd load(double t) const;

  /// Dirichlet data (velocity DOFs, plus a pinned pressure DOF for the
  /// zero-mean case) at time t, in the global x = [u, p] numbering.
  DirichletData dirichlet_data(double t) const;

  /// Velocity Dirichlet values at time t on the velocity DOFs.
  Eigen::VectorXd boundary_velocity(double t) const;

  /// Removes the mean of a pressure vector when the space is zero-mean.
  void normalize_pressure(Eigen::VectorXd &p) const;

  /// Monolithic system of one linearized step, before constraints:
  /// [[c M + nu A + N(w) + S_h + mu G, -B^T], [B, s_pres]].
  SparseMatrix system_matrix(double time_coefficient, const Eigen::VectorXd &convecting) const;

private:
  StepReport advance(FOMState &state);
  Eigen::VectorXd solve(SparseMatrix K, Eigen::VectorXd rhs, double t_new, double &residual);

  FOMConfig                                            cfg_;
  FlowProblem                                          problem_;
  FlowSpaces                                           spaces_;
  FlowOperators                                        ops_;
  SparseMatrix                                         constant_part_; ///< nu A + S_h + mu G, coupling, s_pres
  Eigen::UmfPackLU<SparseMatrix> lu_;
  bool                                                 pattern_analyzed_ = false;
};

} // namespace podrom
