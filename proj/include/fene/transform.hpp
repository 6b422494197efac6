#pragma once

// Separable quadrature transforms between coefficient vectors and tensor grids in
// (p, theta, phi): Gauss-Jacobi(s, 1/2) in p, Gauss-Legendre in cos(theta),
// trapezoid in phi.

#include "fene/fp_solver.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace fene {

class TransformGrid {
 public:
  /// Point counts default to N+40, L+40, 2L+80 when given as 0.
  TransformGrid(const Discretization& layout, int np = 0, int ntheta = 0, int nphi = 0);
  /// Grid with an explicit radial rule (any Gauss-Jacobi exponents).
  TransformGrid(const Discretization& layout, const QuadratureRule& radial_rule, int ntheta, int nphi);

  int np() const { return static_cast<int>(p_.size()); }
  int ntheta() const { return static_cast<int>(x_.size()); }
  int nphi() const { return nphi_; }
  std::size_t points() const { return p_.size() * x_.size() * static_cast<std::size_t>(nphi_); }
  std::size_t flat(int ip, int it, int iph) const {
    return (static_cast<std::size_t>(ip) * x_.size() + it) * nphi_ + iph;
  }

  const std::vector<double>& p_nodes() const { return p_; }
  const std::vector<double>& p_weights() const { return wp_; }
  const std::vector<double>& x_nodes() const { return x_; }
  const std::vector<double>& x_weights() const { return wx_; }
  double phi(int k) const;
  double phi_weight() const;

  /// Samples g(p, theta, phi) at every node (flat order p, theta, phi).
  Eigen::VectorXd sample(const std::function<double(double, double, double)>& g) const;

  /// Load vector F = (g, phi_ln Y_lm^v)_{rule} from grid samples.
  Eigen::VectorXd analysis(const Eigen::VectorXd& values) const;
  /// Field values sum b phi Y at every node.
  Eigen::VectorXd synthesis(const Eigen::VectorXd& coeffs) const;

  /// Sum of w_p w_theta w_phi values over the grid.
  double integrate(const Eigen::VectorXd& values) const;

 private:
  void build(int ntheta, int nphi);

  const Discretization* layout_;
  std::vector<double> p_, wp_, x_, wx_;
  int nphi_ = 0;
  std::vector<Eigen::MatrixXd> radial_;   // per degree: np x dim
  Eigen::MatrixXd legendre_;              // ntheta x (index(l,m))
  Eigen::MatrixXd azimuth_;               // nphi x (2L+1), local_index(m,v)
};

/// Galerkin projection of h(p, theta, phi) onto the discrete space.
SpectralState project_function(const AssembledOperator& op, const std::function<double(double, double, double)>& h,
                               const TransformGrid* grid = nullptr);

/// Load vector of h (mapped inner products with every basis function).
Eigen::VectorXd load_vector(const AssembledOperator& op, const std::function<double(double, double, double)>& h,
                            const TransformGrid* grid = nullptr);

}  // namespace fene
