#pragma once

#include "podrom/snapshots.hpp"

#include <iosfwd>
#include <optional>

namespace podrom
{

struct PODOptions
{
  std::optional<int>    r;                ///< requested number of modes
  std::optional<double> energy_threshold; ///< alternatively, smallest r with captured energy >= threshold
  double                absolute_cutoff = 1e-10;
  double                relative_cutoff = 1e-12;
};

/// POD basis by the method of snapshots.
///
/// All d modes above the rank cutoff are kept; `r` marks the working
/// truncation. Modes are L^2 orthonormal columns of `modes`.
struct PODBasis
{
  std::shared_ptr<const FESpace> space;
  Eigen::MatrixXd                modes;        ///< n_dofs x d
  Eigen::VectorXd                eigenvalues;  ///< all M correlation eigenvalues, nonincreasing
  Eigen::MatrixXd                eigenvectors; ///< M x M, columns match `eigenvalues`
  int                            rank = 0;     ///< d
  int                            r = 0;
  int                            M = 0;
  bool                           centered = false;
  Eigen::VectorXd                mean;

  /// First k modes.
  Eigen::MatrixXd leading(int k) const;
  /// sum_{j > k} lambda_j over the retained spectrum.
  double tail(int k) const;
  /// Digest of the space, r, d, and all stored numbers.
  std::uint64_t signature() const;
  /// mean (if centered) + sum_k c_k phi_k.
  Eigen::VectorXd reconstruct(const Eigen::VectorXd &coefficients) const;
};

/// k_ij = (1/M) (u_i, u_j) in the mass inner product.
Eigen::MatrixXd build_correlation(const SnapshotSet &snapshots, const SparseMatrix &mass);

/// phi_k = S v_k / sqrt(M lambda_k), followed by a mass-orthonormalization
/// pass and the sign convention (largest-magnitude coefficient positive).
PODBasis compute_basis(const Eigen::MatrixXd &correlation,
                       const SnapshotSet     &snapshots,
                       const SparseMatrix    &mass,
                       const PODOptions      &options);

/// Convenience: correlation + basis.
PODBasis compute_basis(const SnapshotSet &snapshots, const SparseMatrix &mass, const PODOptions &options);

/// Coefficients (f - mean, phi_k), k < r (mean only when centered).
Eigen::VectorXd project_L2(const PODBasis &basis, const SparseMatrix &mass, const Eigen::VectorXd &f, std::optional<int> r = {});

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_norm(const Eigen::MatrixXd &S, double rtol = 1e-8, int max_iterations = 100000);

/// Per-basis spectral data for the first r modes.
struct ModeDiagnostics
{
  double              S_norm = 0.0;      ///< ||S||_2 with S_ij = (grad phi_i, grad phi_j), i,j < r
  double              S_norm_full = 0.0; ///< the same over all d modes
  double              C_r_H1 = 0.0;      ///< || sum_{k<r} grad phi_k ||_0
  double              tail = 0.0;        ///< sum_{k>r} lambda_k
  std::vector<double> grad_norms_sq;     ///< ||grad phi_k||_0^2, all d modes
};

ModeDiagnostics mode_diagnostics(const PODBasis &basis, const SparseMatrix &stiffness, int r);

struct SpectralDiagnostics
{
  int                 r = 0;
  double              Sv_norm = 0.0;
  double              Sv_norm_full = 0.0;
  double              Sp_norm = 0.0;
  double              C_r_H1 = 0.0;
  double              Lambda_r = 0.0;
  double              Z_r = 0.0;
  std::vector<double> grad_norms_sq;
};

/// Velocity based quantities; pressure ones are filled when a pressure basis
/// and its scalar stiffness are given.
SpectralDiagnostics spectral_diagnostics(const PODBasis     &velocity,
                                         const SparseMatrix &velocity_stiffness,
                                         int                 r,
                                         const PODBasis     *pressure = nullptr,
                                         const SparseMatrix *pressure_stiffness = nullptr);

struct IdentityReport
{
  int    r = 0;
  double l2_lhs = 0.0, l2_rhs = 0.0, l2_residual = 0.0; ///< residual relative to mean snapshot energy
  double h1_lhs = 0.0, h1_rhs = 0.0, h1_residual = 0.0; ///< relative to mean snapshot gradient energy
  double S_norm = 0.0;
  int    inverse_samples = 0;
  int    inverse_violations = 0;
  double inverse_max_ratio = 0.0; ///< max ||grad v|| / (sqrt(||S||) ||v||)
  bool   passed = false;
};

/// Checks the L^2 and H^1 projection-error identities and the inverse
/// inequality on `samples` random members of the span of the first r modes.
IdentityReport verify_spectral_identities(const PODBasis     &basis,
                                          const SnapshotSet  &snapshots,
                                          const SparseMatrix &mass,
                                          const SparseMatrix &stiffness,
                                          int                 r,
                                          unsigned            seed = 1,
                                          int                 samples = 100,
                                          double              tolerance = 1e-9);

void     write_basis(const PODBasis &basis, const ModeDiagnostics &diag, std::ostream &out);
PODBasis read_basis(std::shared_ptr<const FESpace> space, std::istream &in, ModeDiagnostics *diag = nullptr);

} // namespace podrom
