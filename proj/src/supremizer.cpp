#include "podrom/supremizer.hpp"

#include "podrom/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <cmath>

namespace podrom
{

namespace
{

// Stiffness restricted to the unconstrained velocity DOFs.
class FreeLaplace
{
public:
  FreeLaplace(const FESpace &V, const SparseMatrix &A)
    : pos_(V.n_dofs(), -1)
  {
    for (int d = 0; d < V.n_dofs(); ++d)
      if (!V.is_constrained(d))
        {
          pos_[d] = static_cast<int>(free_.size());
          free_.push_back(d);
        }
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it)
        if (pos_[it.row()] >= 0 && pos_[it.col()] >= 0)
          trip.emplace_back(pos_[it.row()], pos_[it.col()], it.value());
    Aff_.resize(static_cast<int>(free_.size()), static_cast<int>(free_.size()));
    Aff_.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(Aff_);
    if (solver_.info() != Eigen::Success)
      throw SolverError("supremizer: stiffness factorization failed (no Dirichlet boundary?)");
  }

  // Solves A w = rhs on free DOFs, w = 0 on constrained ones.
  Eigen::VectorXd solve(const Eigen::VectorXd &rhs, double &residual) const
  {
    Eigen::VectorXd rf(free_.size());
    for (std::size_t i = 0; i < free_.size(); ++i)
      rf[i] = rhs[free_[i]];
    const Eigen::VectorXd wf = solver_.solve(rf);
    const double          scale = rf.norm();
    residual = scale > 0.0 ? (Aff_ * wf - rf).norm() / scale : (Aff_ * wf - rf).norm();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(rhs.size());
    for (std::size_t i = 0; i < free_.size(); ++i)
      w[free_[i]] = wf[i];
    return w;
  }

private:
  std::vector<int>                    pos_;
  std::vector<int>                    free_;
  SparseMatrix                        Aff_;
  Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

} // namespace

Eigen::VectorXd solve_supremizer(const FESpace         &velocity,
                                 const SparseMatrix    &stiffness,
                                 const SparseMatrix    &divergence,
                                 const Eigen::VectorXd &psi,
                                 double                *residual)
{
  const FreeLaplace L(velocity, stiffness);
  double            res = 0.0;
  Eigen::VectorXd   w = L.solve(-(divergence.transpose() * psi), res);
  if (residual)
    *residual = res;
  return w;
}

SupremizerSpace build_supremizers(const FESpace         &velocity,
                                  const SparseMatrix    &stiffness,
                                  const SparseMatrix    &divergence,
                                  const Eigen::MatrixXd &Psi)
{
  if (Psi.rows() != divergence.rows() || divergence.cols() != velocity.n_dofs())
    throw ValidationError("build_supremizers: dimension mismatch");
  const FreeLaplace L(velocity, stiffness);
  SupremizerSpace   s;
  const int         r = static_cast<int>(Psi.cols());
  s.raw.resize(velocity.n_dofs(), r);
  for (int k = 0; k < r; ++k)
    {
      double res = 0.0;
      s.raw.col(k) = L.solve(-(divergence.transpose() * Psi.col(k)), res);
      s.raw_residuals.push_back(res);
      if (!(res <= 1e-10))
        throw SolverError("build_supremizers: solve " + std::to_string(k) + " has residual " + std::to_string(res));
    }

  s.zeta = s.raw;
  double max_norm = 0.0;
  for (int k = 0; k < r; ++k)
    max_norm = std::max(max_norm, std::sqrt(s.raw.col(k).dot(stiffness * s.raw.col(k))));
  for (int pass = 0; pass < 2; ++pass)
    for (int k = 0; k < r; ++k)
      {
        Eigen::VectorXd v = s.zeta.col(k);
        for (int j = 0; j < k; ++j)
          v -= s.zeta.col(j).dot(stiffness * v) * s.zeta.col(j);
        const double n = std::sqrt(std::max(0.0, v.dot(stiffness * v)));
        if (!(n > 1e-12 * max_norm) || max_norm == 0.0)
          throw SolverError("build_supremizers: supremizer " + std::to_string(k) + " is linearly dependent on the previous ones");
        s.zeta.col(k) = v / n;
      }
  return s;
}

double compute_beta_r(const Eigen::MatrixXd &zeta,
                      const Eigen::MatrixXd &Psi,
                      const SparseMatrix    &divergence,
                      const SparseMatrix    &velocity_stiffness,
                      const SparseMatrix    &velocity_mass,
                      const SparseMatrix    &pressure_mass,
                      InfSupNorm             norm)
{
  if (zeta.cols() == 0 || Psi.cols() == 0)
    throw ValidationError("compute_beta_r: empty spaces");
  // C(k, j) = (psi_j, div zeta_k)
  const Eigen::MatrixXd C = zeta.transpose() * (divergence.transpose() * Psi);
  Eigen::MatrixXd       H = zeta.transpose() * (velocity_stiffness * zeta);
  if (norm == InfSupNorm::h1_full)
    H += zeta.transpose() * (velocity_mass * zeta);

  Eigen::MatrixXd G = Psi.transpose() * (pressure_mass * Psi);
  G = 0.5 * (G + G.transpose()).eval();

  Eigen::MatrixXd K = C.transpose() * H.ldlt().solve(C);
  K = 0.5 * (K + K.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, G);
  if (eig.info() != Eigen::Success)
    throw SolverError("compute_beta_r: generalized eigensolver failed (dependent pressure modes?)");
  return std::sqrt(std::max(0.0, eig.eigenvalues().minCoeff()));
}

double principal_angle_cosine(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B, const SparseMatrix &inner)
{
  if (A.cols() == 0 || B.cols() == 0)
    return 0.0;
  auto orthonormal = [&](const Eigen::MatrixXd &X) {
    const Eigen::MatrixXd G = X.transpose() * (inner * X);
    const Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
      throw SolverError("principal_angle_cosine: basis is rank deficient");
    // X L^{-T} has identity Gram matrix
    return Eigen::MatrixXd(llt.matrixU().solve<Eigen::OnTheRight>(X));
  };
  const Eigen::MatrixXd QA = orthonormal(A);
  const Eigen::MatrixXd QB = orthonormal(B);
  const Eigen::MatrixXd M = QA.transpose() * (inner * QB);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return std::min(1.0, svd.singularValues()(0));
}

PressureRecovery build_pressure_recovery(const SupremizerSpace &sup,
                                         const PODBasis        &pressure,
                                         int                    rp,
                                         const ROMOperators    &ops,
                                         const FlowSpaces      &spaces,
                                         const FlowOperators   &fom_ops)
{
  PressureRecovery rec;
  rec.Psi = pressure.leading(rp);
  auto proj = project_momentum(*spaces.velocity, fom_ops, ops.Phi, ops.lift, {sup.zeta}, false);
  rec.momentum = std::move(proj[0]);
  rec.coupling = sup.zeta.transpose() * (fom_ops.divergence.transpose() * rec.Psi);
  return rec;
}

} // namespace podrom
