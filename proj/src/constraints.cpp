#include "podrom/constraints.hpp"

#include "podrom/errors.hpp"

namespace podrom
{

void eliminate_dofs(SparseMatrix &K, std::span<const int> dofs, double diagonal)
{
  std::vector<bool> mask(K.rows(), false);
  for (int d : dofs)
    {
      if (d < 0 || d >= K.rows())
        throw ValidationError("eliminate_dofs: DOF " + std::to_string(d) + " out of range");
      mask[d] = true;
    }
  K.prune([&](Eigen::Index i, Eigen::Index j, double) { return !mask[i] && !mask[j]; });
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(dofs.size());
  for (int d : dofs)
    diag.emplace_back(d, d, diagonal);
  SparseMatrix D(K.rows(), K.cols());
  D.setFromTriplets(diag.begin(), diag.end(), [](double a, double) { return a; });
  K += D;
  K.makeCompressed();
}

void apply_dirichlet(SparseMatrix &K, Eigen::VectorXd &b, const DirichletData &data)
{
  if (data.dofs.size() != data.values.size())
    throw ValidationError("apply_dirichlet: DOF and value counts differ");
  if (K.rows() != K.cols() || K.rows() != b.size())
    throw ValidationError("apply_dirichlet: system dimensions do not match");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(b.size());
  for (std::size_t k = 0; k < data.dofs.size(); ++k)
    g[data.dofs[k]] = data.values[k];
  b -= K * g;
  eliminate_dofs(K, data.dofs);
  for (std::size_t k = 0; k < data.dofs.size(); ++k)
    b[data.dofs[k]] = data.values[k];
}

} // namespace podrom
