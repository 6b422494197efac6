#pragma once

// Small symmetric 3x3 tensor helpers shared by the closure models.

#include <Eigen/Dense>

namespace fene {

/// Eigenvalues sorted descending with the matching orthonormal eigenvectors as columns.
struct SymEig {
  Eigen::Vector3d values;
  Eigen::Matrix3d vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi rotations to machine precision. Throws std::runtime_error when
/// the matrix is non-finite or the sweeps do not converge.
SymEig sym_eig3(const Eigen::Matrix3d& A);

/// Q diag(d) Q^T.
Eigen::Matrix3d from_eigen(const Eigen::Matrix3d& Q, const Eigen::Vector3d& d);

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& A);

/// Symmetric, positive definite and trace below one.
bool conformation_admissible(const Eigen::Matrix3d& C, double sym_tol = 1e-12);

/// c1 >= c2 >= c3 > 0 and sum < 1.
bool sorted_admissible(const Eigen::Vector3d& c);

}  // namespace fene
