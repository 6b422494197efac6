#include "fene/tensor3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fene {

SymEig sym_eig3(const Eigen::Matrix3d& A) {
  if (!A.allFinite()) throw std::runtime_error("eigendecomposition of a non-finite matrix");
  Eigen::Matrix3d a = symmetrize(A);
  Eigen::Matrix3d V = Eigen::Matrix3d::Identity();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  int sweep = 0;
  for (; sweep < 50; ++sweep) {
    const double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
    if (off <= 1e-18 * scale) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
        J(p, p) = c;
        J(q, q) = c;
        J(p, q) = s;
        J(q, p) = -s;
        a = J.transpose() * a * J;
        a(p, q) = a(q, p) = 0.0;
        V = V * J;
      }
  }
  if (sweep == 50) throw std::runtime_error("Jacobi eigendecomposition did not converge");
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  SymEig out;
  out.sweeps = sweep;
  for (int k = 0; k < 3; ++k) {
    out.values(k) = a(idx[k], idx[k]);
    out.vectors.col(k) = V.col(idx[k]);
  }
  return out;
}

Eigen::Matrix3d from_eigen(const Eigen::Matrix3d& Q, const Eigen::Vector3d& d) {
  return Q * d.asDiagonal() * Q.transpose();
}

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& A) { return 0.5 * (A + A.transpose()); }

bool conformation_admissible(const Eigen::Matrix3d& C, double sym_tol) {
  if (!C.allFinite()) return false;
  if ((C - C.transpose()).cwiseAbs().maxCoeff() > sym_tol) return false;
  const Eigen::Vector3d ev = sym_eig3(C).values;
  return ev(2) > 0.0 && C.trace() < 1.0;
}

bool sorted_admissible(const Eigen::Vector3d& c) {
  return c.allFinite() && c(0) >= c(1) && c(1) >= c(2) && c(2) > 0.0 && c.sum() < 1.0;
}

}  // namespace fene
