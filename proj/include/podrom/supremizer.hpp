#pragma once

#include "podrom/rom.hpp"

namespace podrom
{

/// Supremizers of a set of pressure modes: raw solutions w_k of
/// (grad w, grad v) = -(div v, psi_k) for all v, and the same fields after
/// Gram-Schmidt in the gradient inner product.
struct SupremizerSpace
{
  Eigen::MatrixXd     raw;
  Eigen::MatrixXd     zeta;
  std::vector<double> raw_residuals; ///< relative residual of each raw solve

  int size() const { return static_cast<int>(zeta.cols()); }
};

/// One constrained vector-Laplace solve per column of Psi, then
/// orthonormalization. Throws SolverError if a solve misses the 1e-10
/// residual or the raw set is linearly dependent.
SupremizerSpace build_supremizers(const FESpace         &velocity,
                                  const SparseMatrix    &stiffness,
                                  const SparseMatrix    &divergence,
                                  const Eigen::MatrixXd &Psi);

/// Raw supremizer of one pressure field (no orthonormalization).
Eigen::VectorXd solve_supremizer(const FESpace         &velocity,
                                 const SparseMatrix    &stiffness,
                                 const SparseMatrix    &divergence,
                                 const Eigen::VectorXd &psi,
                                 double                *residual = nullptr);

enum class InfSupNorm
{
  h1_seminorm, ///< ||grad zeta||_0
  h1_full      ///< (||zeta||_0^2 + ||grad zeta||_0^2)^{1/2}
};

/// beta_r = inf_psi sup_zeta (psi, div zeta) / (||zeta|| ||psi||_0) over
/// span(Psi) x span(zeta): the smallest singular value of the coupling
/// after normalizing both sides, computed as the square root of the
/// smallest generalized eigenvalue of (C^T H^{-1} C, Psi^T M_p Psi).
double compute_beta_r(const Eigen::MatrixXd &zeta,
                      const Eigen::MatrixXd &Psi,
                      const SparseMatrix    &divergence,
                      const SparseMatrix    &velocity_stiffness,
                      const SparseMatrix    &velocity_mass,
                      const SparseMatrix    &pressure_mass,
                      InfSupNorm             norm = InfSupNorm::h1_seminorm);

/// Largest cosine of the principal angles between span(A) and span(B) in the
/// inner product given by `inner`.
double principal_angle_cosine(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B, const SparseMatrix &inner);

} // namespace podrom
