#include "podrom/pod.hpp"

#include "podrom/digest.hpp"
#include "podrom/errors.hpp"
#include "podrom/io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace podrom
{

Eigen::MatrixXd PODBasis::leading(int k) const
{
  if (k < 0 || k > rank)
    throw ValidationError("PODBasis: requested " + std::to_string(k) + " modes, rank is " + std::to_string(rank));
  return modes.leftCols(k);
}

double PODBasis::tail(int k) const
{
  double s = 0.0;
  for (int j = k; j < rank; ++j)
    s += eigenvalues[j];
  return s;
}

std::uint64_t PODBasis::signature() const
{
  Digest d;
  d.add(space->signature()).add(r).add(rank).add(M).add(centered ? 1 : 0);
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    d.add(eigenvalues[i]);
  for (Eigen::Index i = 0; i < modes.size(); ++i)
    d.add(modes.data()[i]);
  return d.value();
}

Eigen::VectorXd PODBasis::reconstruct(const Eigen::VectorXd &c) const
{
  Eigen::VectorXd f = modes.leftCols(c.size()) * c;
  if (centered)
    f += mean;
  return f;
}

Eigen::MatrixXd build_correlation(const SnapshotSet &snapshots, const SparseMatrix &mass)
{
  if (snapshots.size() < 1)
    throw ValidationError("build_correlation: empty snapshot set");
  if (mass.rows() != snapshots.n_dofs() || mass.cols() != snapshots.n_dofs())
    throw ValidationError("build_correlation: mass matrix does not match the snapshot space");
  const Eigen::MatrixXd MS = mass * snapshots.data;
  Eigen::MatrixXd       K = snapshots.data.transpose() * MS / static_cast<double>(snapshots.size());
  K = 0.5 * (K + K.transpose()).eval();
  return K;
}

PODBasis compute_basis(const Eigen::MatrixXd &K, const SnapshotSet &snapshots, const SparseMatrix &mass, const PODOptions &options)
{
  const int m = snapshots.size();
  if (K.rows() != m || K.cols() != m)
    throw ValidationError("compute_basis: correlation size does not match the snapshot count");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  if (eig.info() != Eigen::Success)
    throw SolverError("compute_basis: symmetric eigensolver failed");

  PODBasis b;
  b.space = snapshots.space;
  b.M = m;
  b.centered = snapshots.centered;
  b.mean = snapshots.mean;
  b.eigenvalues = eig.eigenvalues().reverse();
  const Eigen::MatrixXd V = eig.eigenvectors().rowwise().reverse();

  const double lambda1 = m > 0 ? std::max(b.eigenvalues[0], 0.0) : 0.0;
  const double cutoff = std::max(options.absolute_cutoff, options.relative_cutoff * lambda1);
  int          d = 0;
  while (d < m && b.eigenvalues[d] > cutoff)
    ++d;
  b.rank = d;
  b.eigenvectors = V;

  b.modes.resize(snapshots.n_dofs(), d);
  for (int k = 0; k < d; ++k)
    b.modes.col(k) = snapshots.data * V.col(k) / std::sqrt(m * b.eigenvalues[k]);

  // Two passes of modified Gram-Schmidt in the mass inner product restore
  // orthonormality lost for small eigenvalues.
  for (int pass = 0; pass < 2; ++pass)
    for (int k = 0; k < d; ++k)
      {
        Eigen::VectorXd v = b.modes.col(k);
        for (int j = 0; j < k; ++j)
          v -= b.modes.col(j).dot(mass * v) * b.modes.col(j);
        const double n = std::sqrt(v.dot(mass * v));
        if (!(n > 0.0))
          throw SolverError("compute_basis: degenerate mode " + std::to_string(k));
        b.modes.col(k) = v / n;
      }

  for (int k = 0; k < d; ++k)
    {
      Eigen::Index imax = 0;
      b.modes.col(k).cwiseAbs().maxCoeff(&imax);
      if (b.modes(imax, k) < 0.0)
        {
          b.modes.col(k) *= -1.0;
          b.eigenvectors.col(k) *= -1.0;
        }
    }

  if (options.r && options.energy_threshold)
    throw ValidationError("compute_basis: give either r or an energy threshold, not both");
  if (options.r)
    {
      if (*options.r < 0 || *options.r > d)
        throw ValidationError("compute_basis: requested r = " + std::to_string(*options.r) + " exceeds the rank " +
                              std::to_string(d));
      b.r = *options.r;
    }
  else if (options.energy_threshold)
    {
      const double th = *options.energy_threshold;
      if (!(th > 0.0 && th <= 1.0))
        throw ValidationError("compute_basis: energy threshold must lie in (0, 1]");
      const double total = b.eigenvalues.head(d).sum();
      double       acc = 0.0;
      b.r = d;
      for (int k = 0; k < d; ++k)
        {
          acc += b.eigenvalues[k];
          if (acc >= th * total * (1.0 - 1e-14))
            {
              b.r = k + 1;
              break;
            }
        }
    }
  else
    b.r = d;
  return b;
}

PODBasis compute_basis(const SnapshotSet &snapshots, const SparseMatrix &mass, const PODOptions &options)
{
  return compute_basis(build_correlation(snapshots, mass), snapshots, mass, options);
}

Eigen::VectorXd project_L2(const PODBasis &basis, const SparseMatrix &mass, const Eigen::VectorXd &f, std::optional<int> r)
{
  const int k = r.value_or(basis.r);
  if (f.size() != basis.modes.rows())
    throw ValidationError("project_L2: field length does not match the basis space");
  Eigen::VectorXd g = basis.centered ? Eigen::VectorXd(f - basis.mean) : f;
  return basis.leading(k).transpose() * (mass * g);
}

double power_iteration_norm(const Eigen::MatrixXd &S, double rtol, int max_iterations)
{
  const int n = static_cast<int>(S.rows());
  if (n == 0)
    return 0.0;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i)
    x[i] = 1.0 + 0.01 * (i % 7);
  x.normalize();
  double lambda = x.dot(S * x);
  for (int it = 0; it < max_iterations; ++it)
    {
      Eigen::VectorXd y = S * x;
      const double    ny = y.norm();
      if (ny == 0.0)
        return 0.0;
      x = y / ny;
      const Eigen::VectorXd Sx = S * x;
      lambda = x.dot(Sx);
      if ((Sx - lambda * x).norm() <= rtol * std::abs(lambda))
        break;
    }
  return lambda;
}

ModeDiagnostics mode_diagnostics(const PODBasis &basis, const SparseMatrix &stiffness, int r)
{
  if (r < 0 || r > basis.rank)
    throw ValidationError("mode_diagnostics: r out of range");
  ModeDiagnostics       d;
  const Eigen::MatrixXd AV = stiffness * basis.modes;
  const Eigen::MatrixXd S_full = basis.modes.transpose() * AV;
  const Eigen::MatrixXd S = S_full.topLeftCorner(r, r);
  d.S_norm = power_iteration_norm(S);
  d.S_norm_full = power_iteration_norm(S_full);
  d.C_r_H1 = std::sqrt(std::max(0.0, S.sum()));
  d.tail = basis.tail(r);
  for (int k = 0; k < basis.rank; ++k)
    d.grad_norms_sq.push_back(S_full(k, k));
  return d;
}

SpectralDiagnostics spectral_diagnostics(const PODBasis     &velocity,
                                         const SparseMatrix &velocity_stiffness,
                                         int                 r,
                                         const PODBasis     *pressure,
                                         const SparseMatrix *pressure_stiffness)
{
  const ModeDiagnostics v = mode_diagnostics(velocity, velocity_stiffness, r);
  SpectralDiagnostics   s;
  s.r = r;
  s.Sv_norm = v.S_norm;
  s.Sv_norm_full = v.S_norm_full;
  s.C_r_H1 = v.C_r_H1;
  s.Lambda_r = v.tail;
  s.grad_norms_sq = v.grad_norms_sq;
  if (pressure)
    {
      const int rp = std::min(r, pressure->rank);
      s.Z_r = pressure->tail(rp);
      if (pressure_stiffness)
        s.Sp_norm = mode_diagnostics(*pressure, *pressure_stiffness, rp).S_norm;
    }
  return s;
}

IdentityReport verify_spectral_identities(const PODBasis     &basis,
                                          const SnapshotSet  &snapshots,
                                          const SparseMatrix &mass,
                                          const SparseMatrix &stiffness,
                                          int                 r,
                                          unsigned            seed,
                                          int                 samples,
                                          double              tolerance)
{
  if (r < 0 || r > basis.rank)
    throw ValidationError("verify_spectral_identities: r out of range");
  if (snapshots.space->signature() != basis.space->signature() || snapshots.size() != basis.M)
    throw ValidationError("verify_spectral_identities: basis was not built from these snapshots");

  IdentityReport rep;
  rep.r = r;
  const int       m = snapshots.size();
  const auto      Phi = basis.leading(r);
  const auto     &U = snapshots.data; // fluctuations when centered, like the basis
  const Eigen::MatrixXd C = Phi.transpose() * (mass * U);
  const Eigen::MatrixXd E = U - Phi * C;

  double energy = 0.0, grad_energy = 0.0;
  for (int j = 0; j < m; ++j)
    {
      const Eigen::VectorXd e = E.col(j);
      rep.l2_lhs += e.dot(mass * e);
      rep.h1_lhs += e.dot(stiffness * e);
      energy += U.col(j).dot(mass * U.col(j));
      grad_energy += U.col(j).dot(stiffness * U.col(j));
    }
  rep.l2_lhs /= m;
  rep.h1_lhs /= m;
  energy /= m;
  grad_energy /= m;

  const ModeDiagnostics diag = mode_diagnostics(basis, stiffness, r);
  // Tails run over the whole correlation spectrum. Beyond the rank cutoff the
  // modes are not formed, so lambda_k ||grad phi_k||^2 is evaluated as
  // v_k^T U^T A U v_k / M, which needs no division by lambda_k.
  for (int k = r; k < m; ++k)
    rep.l2_rhs += basis.eigenvalues[k];
  for (int k = r; k < basis.rank; ++k)
    rep.h1_rhs += basis.eigenvalues[k] * diag.grad_norms_sq[k];
  if (basis.rank < m)
    {
      const Eigen::MatrixXd Vt = basis.eigenvectors.rightCols(m - std::max(r, basis.rank));
      const Eigen::MatrixXd W = U * Vt;
      rep.h1_rhs += (W.transpose() * (stiffness * W)).trace() / m;
    }
  rep.l2_residual = std::abs(rep.l2_lhs - rep.l2_rhs) / std::max(energy, 1e-300);
  rep.h1_residual = std::abs(rep.h1_lhs - rep.h1_rhs) / std::max(grad_energy, 1e-300);

  rep.S_norm = diag.S_norm;
  rep.inverse_samples = r > 0 ? samples : 0;
  std::mt19937_64                  rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::MatrixXd            APhi = stiffness * Phi;
  const Eigen::MatrixXd            MPhi = mass * Phi;
  for (int s = 0; s < rep.inverse_samples; ++s)
    {
      Eigen::VectorXd c(r);
      for (int k = 0; k < r; ++k)
        c[k] = normal(rng);
      const Eigen::VectorXd v = Phi * c;
      const double          grad = std::sqrt(std::max(0.0, v.dot(APhi * c)));
      const double          l2 = std::sqrt(std::max(0.0, v.dot(MPhi * c)));
      const double          bound = std::sqrt(rep.S_norm) * l2;
      rep.inverse_max_ratio = std::max(rep.inverse_max_ratio, grad / bound);
      if (grad > bound + 1e-12 * std::max(1.0, bound))
        ++rep.inverse_violations;
    }
  rep.passed = rep.l2_residual <= tolerance && rep.h1_residual <= tolerance && rep.inverse_violations == 0;
  return rep;
}

void write_basis(const PODBasis &b, const ModeDiagnostics &diag, std::ostream &out)
{
  BinaryWriter w(out);
  w.magic("PRBASIS1");
  w.u64(b.space->signature());
  w.i64(b.r);
  w.i64(b.rank);
  w.i64(b.M);
  w.i64(b.centered ? 1 : 0);
  w.vector(b.eigenvalues);
  w.matrix(b.modes);
  w.matrix(b.eigenvectors);
  if (b.centered)
    w.vector(b.mean);
  w.f64(diag.S_norm);
  w.f64(diag.S_norm_full);
  w.f64(diag.C_r_H1);
  w.f64(diag.tail);
  w.vector(Eigen::Map<const Eigen::VectorXd>(diag.grad_norms_sq.data(), static_cast<Eigen::Index>(diag.grad_norms_sq.size())));
}

PODBasis read_basis(std::shared_ptr<const FESpace> space, std::istream &in, ModeDiagnostics *diag)
{
  BinaryReader r(in);
  r.magic("PRBASIS1");
  if (r.u64() != space->signature())
    throw ValidationError("read_basis: space signature mismatch");
  PODBasis b;
  b.space = std::move(space);
  b.r = static_cast<int>(r.i64());
  b.rank = static_cast<int>(r.i64());
  b.M = static_cast<int>(r.i64());
  b.centered = r.i64() != 0;
  b.eigenvalues = r.vector();
  b.modes = r.matrix();
  b.eigenvectors = r.matrix();
  if (b.centered)
    b.mean = r.vector();
  if (b.modes.rows() != b.space->n_dofs() || b.modes.cols() != b.rank || b.r > b.rank)
    throw ValidationError("read_basis: inconsistent mode array");
  ModeDiagnostics d;
  d.S_norm = r.f64();
  d.S_norm_full = r.f64();
  d.C_r_H1 = r.f64();
  d.tail = r.f64();
  const Eigen::VectorXd g = r.vector();
  d.grad_norms_sq.assign(g.data(), g.data() + g.size());
  if (diag)
    *diag = d;
  return b;
}

} // namespace podrom
