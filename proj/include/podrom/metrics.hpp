#pragma once

#include "podrom/fom.hpp"
#include "podrom/pod.hpp"

#include <vector>

namespace podrom
{

/// 1/2 u^T M u.
double kinetic_energy(const Eigen::VectorXd &u, const SparseMatrix &mass);

/// Reference length and velocity of the drag/lift normalization
/// c = -(2 / (D U^2)) [...].
struct DragLiftConfig
{
  double D = 0.1;
  double U_bar = 1.0;
  double nu = 1e-3;
};

/// Velocity test fields equal to (1,0) resp. (0,1) on obstacle DOFs, zero on
/// every other boundary DOF, discretely harmonic inside.
struct DragLiftFields
{
  Eigen::VectorXd v_D;
  Eigen::VectorXd v_L;
};

DragLiftFields build_drag_lift_fields(const FESpace &velocity, const SparseMatrix &scalar_stiffness);

struct DragLift
{
  double c_D = 0.0;
  double c_L = 0.0;
};

/// Volume-integral drag and lift with time derivative (u - u_prev)/dt.
DragLift drag_lift(const FESpace         &velocity,
                   const FlowOperators   &ops,
                   const DragLiftFields  &fields,
                   const Eigen::VectorXd &u,
                   const Eigen::VectorXd &u_prev,
                   const Eigen::VectorXd &p,
                   double                 dt,
                   const DragLiftConfig  &cfg);

/// Drag and lift from the traction -(nu du/dn - p n) integrated over the
/// obstacle edges, n pointing out of the fluid. Used as an independent check
/// of the volume form.
DragLift boundary_traction(const FESpace         &velocity,
                           const FESpace         &pressure,
                           const Eigen::VectorXd &u,
                           const Eigen::VectorXd &p,
                           const DragLiftConfig  &cfg);

/// max_q |(div u, q)| over the nodal pressure basis, i.e. ||B u||_inf.
double weak_divergence(const SparseMatrix &divergence, const Eigen::VectorXd &u);

struct L2TimeError
{
  double sum = 0.0;  ///< sum_j dt ||a_j - b_j||_0^2
  double root = 0.0; ///< its square root
};

/// Discrete l^2(L^2) distance between two trajectories on the same time grid.
L2TimeError discrete_l2_error(const std::vector<Eigen::VectorXd> &a,
                              const std::vector<Eigen::VectorXd> &b,
                              const SparseMatrix                 &mass,
                              double                              dt);

/// ||u_h - g||_0 by high-order quadrature against an exact field.
double l2_error(const FESpace &space, const Eigen::VectorXd &u, const VectorFunction &g, int quad_degree = 10);
double l2_error(const FESpace &space, const Eigen::VectorXd &u, const ScalarFunction &g, int quad_degree = 10);

/// |||Z||| = sup_{phi in V^r} (Z, div phi)/||grad phi||_0 + s_pres(Z, Z)^{1/2}.
/// `modes` spans V^r; the supremum is sqrt(g^T S^{-1} g) with
/// g_k = (Z, div phi_k) and S the reduced stiffness.
double triple_norm(const Eigen::VectorXd &Z,
                   const Eigen::MatrixXd &modes,
                   const SparseMatrix    &divergence,
                   const SparseMatrix    &stiffness,
                   const SparseMatrix    &s_pres);

struct ErrorIndicator
{
  int    r = 0;
  double velocity = 0.0;
  double pressure = 0.0;
};

/// LPS: velocity = pressure = S2 Lambda_r + Z_r.
/// Grad-div: velocity = S2 Lambda_r, pressure = alpha C_r S2 Lambda_r + Z_r.
/// S2 is the spectral norm of the full-rank POD stiffness matrix.
ErrorIndicator error_indicators(const SpectralDiagnostics &diag, double alpha, Scheme scheme);

/// Kendall rank correlation (tau-b) of two equally long samples.
double kendall_tau(const std::vector<double> &x, const std::vector<double> &y);

} // namespace podrom
