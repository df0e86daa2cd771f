#pragma once

#include "podrom/fe_space.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>

namespace podrom
{

using SparseMatrix = Eigen::SparseMatrix<double>;

/// LPS and grad-div parameters: tau_nu,K = C_v h_K, tau_p,K = C_p h_K.
struct StabilizationConfig
{
  double C_v = 1e-2;
  double C_p = 1e-2;
  double mu = 0.0;
  int    projection_degree = 1;

  /// Throws ValidationError on negative constants or an unsupported projection degree.
  void validate() const;
};

/// Quadrature degree used by default for forms of the given polynomial degree.
/// `extra` raises it, which is how quadrature sufficiency is checked.
struct QuadratureOptions
{
  int extra = 0;
};

/// (phi_j, phi_i) per component.
SparseMatrix assemble_mass(const FESpace &space, QuadratureOptions q = {});

/// (grad phi_j, grad phi_i) per component.
SparseMatrix assemble_stiffness(const FESpace &space, QuadratureOptions q = {});

/// B[k][j] = (psi_k, div phi_j); rows follow the pressure space.
SparseMatrix assemble_divergence(const FESpace &vel, const FESpace &pres, QuadratureOptions q = {});

/// mu (div phi_j, div phi_i). Rejects mu <= 0.
SparseMatrix assemble_grad_div(const FESpace &space, double mu, QuadratureOptions q = {});

/// N[i][j] = b_h(w, phi_j, phi_i), with
/// b_h(u, v, w) = ((u . grad) v, w) + 1/2 ((div u) v, w).
SparseMatrix assemble_convection(const FESpace &space, const Eigen::VectorXd &w, QuadratureOptions q = {});

/// Matrix-free b_h(u, v, w).
double apply_convection(const FESpace         &space,
                        const Eigen::VectorXd &u,
                        const Eigen::VectorXd &v,
                        const Eigen::VectorXd &w,
                        QuadratureOptions      q = {});

/// r_i = b_h(u, v, phi_i) without forming a matrix.
Eigen::VectorXd convection_residual(const FESpace         &space,
                                    const Eigen::VectorXd &u,
                                    const Eigen::VectorXd &v,
                                    QuadratureOptions      q = {});

/// Gradient fluctuation operator of local projection stabilization for a
/// scalar P2 space.
///
/// Gradients of P2 fields are elementwise linear and are stored by their
/// values at the three vertices of every triangle (a DG-P1 vector, index
/// (3*(2*t + d) + m) for triangle t, derivative d, local vertex m). The
/// projection sigma_h maps such a vector to continuous P1 by area-weighted
/// vertex averaging; `complement` is Id - sigma_h on the DG-P1 vectors and
/// `fluctuation` = complement * gradient acts on field coefficients.
struct LpsProjector
{
  SparseMatrix gradient;    ///< field DOFs -> DG-P1 gradient values
  SparseMatrix average;     ///< DG-P1 -> continuous P1 (2 * n_vertices)
  SparseMatrix restriction; ///< continuous P1 -> DG-P1
  SparseMatrix complement;  ///< Id - restriction * average
  SparseMatrix fluctuation; ///< complement * gradient

  int dg_size() const { return static_cast<int>(gradient.rows()); }
};

/// Requires a scalar P2 space.
LpsProjector assemble_lps_fluctuation(const FESpace &scalar_space);

/// Elementwise L^2 mass of DG-P1 vectors, weighted by tau_K = C * h_K.
SparseMatrix dg_weighted_mass(const Mesh &mesh, double C);

struct LpsMatrices
{
  SparseMatrix S_h;    ///< velocity, sum_K tau_nu,K (sigma* grad u, sigma* grad v)_K
  SparseMatrix s_pres; ///< pressure, sum_K tau_p,K (sigma* grad p, sigma* grad q)_K
};

/// `vel` is the vector P2 space and `pres` the scalar P2 space on the same mesh.
LpsMatrices assemble_lps_matrices(const FESpace &vel, const FESpace &pres, const StabilizationConfig &cfg);

/// Scalar LPS form sum_K C h_K (sigma* grad u, sigma* grad v)_K on a scalar P2 space.
SparseMatrix assemble_lps_scalar(const FESpace &scalar_space, double C);

/// (f, phi_i) for a vector load.
Eigen::VectorXd assemble_load(const FESpace &space, const VectorFunction &f, QuadratureOptions q = {});

/// (f, psi_i) for a scalar load.
Eigen::VectorXd assemble_load(const FESpace &space, const ScalarFunction &f, QuadratureOptions q = {});

/// Copies a square operator onto the diagonal `copies` times.
SparseMatrix block_diagonal(const SparseMatrix &block, int copies);

/// Matrix-market coordinate format, 1-based, 17 significant digits.
void write_matrix_market(const SparseMatrix &m, std::ostream &out);
SparseMatrix read_matrix_market(std::istream &in);

} // namespace podrom
