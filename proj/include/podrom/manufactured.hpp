#pragma once

#include "podrom/fom.hpp"

#include <string>
#include <vector>

namespace podrom
{

using SpaceTimeScalar = std::function<double(const Point &, double)>;

/// Analytic incompressible flow (u, p) with the forcing that makes it an
/// exact solution of u_t + (u.grad)u - nu Lap u + grad p = f, div u = 0.
///
/// Construction samples the momentum and continuity residuals with
/// automatic differentiation and throws ValidationError above 1e-10.
struct ManufacturedSolution
{
  std::string     name;
  double          nu = 0.0;
  Rectangle       domain;
  SpaceTimeVector velocity;
  SpaceTimeScalar pressure;
  SpaceTimeVector forcing;
  double          max_residual = 0.0; ///< largest sampled residual

  /// Dirichlet data on all four sides, initial velocity u(., 0).
  FlowProblem problem() const;
  VectorFunction velocity_at(double t) const;
  ScalarFunction pressure_at(double t) const;
};

/// Decaying vortex on the unit square, f = 0, time-dependent boundary values.
ManufacturedSolution taylor_green(double nu);

struct StokesPolyOptions
{
  /// Angular frequencies of the mode amplitudes sin(omega_k t); one velocity
  /// mode per entry. The flow starts from rest.
  std::vector<double> omega{37.0, 53.0, 71.0, 97.0};
  double              pressure_omega = 41.0;
};

/// Sum of polynomial stream-function modes vanishing to second order on the
/// boundary of the unit square (homogeneous Dirichlet data), with
/// oscillating amplitudes, plus a zero-mean polynomial pressure.
ManufacturedSolution stokes_poly(double nu, const StokesPolyOptions &opt = {});

ManufacturedSolution manufactured_by_name(const std::string &name, double nu);

} // namespace podrom
