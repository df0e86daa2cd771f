#pragma once

#include "podrom/assembly.hpp"

#include <span>
#include <vector>

namespace podrom
{

/// Prescribed values for a set of global DOFs of a linear system.
struct DirichletData
{
  std::vector<int>    dofs;
  std::vector<double> values;
};

/// Row/column elimination: K x = b is replaced by a system whose rows and
/// columns of the prescribed DOFs are identity, with the known values moved
/// to the right side. Symmetric operators stay symmetric.
void apply_dirichlet(SparseMatrix &K, Eigen::VectorXd &b, const DirichletData &data);

/// Zeroes the rows and columns of `dofs` and puts `diagonal` on their diagonal.
void eliminate_dofs(SparseMatrix &K, std::span<const int> dofs, double diagonal = 1.0);

} // namespace podrom
