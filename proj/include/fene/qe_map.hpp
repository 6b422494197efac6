#pragma once

// Quasi-equilibrium map between Lagrange multipliers and second moments in the
// common eigenframe: c_i = <q_i^2> under (1-|q|^2)^{b/2} exp(sum_i lambda_i q_i^2).

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>

namespace fene {

class QeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gamma(b/2+5/2) / (2 pi^{3/2} Gamma(b/2+1)). Note C_eq times the integral of
/// (1-|q|^2)^{b/2} over the ball is 1/2, not 1; callers renormalize by mass.
double equilibrium_constant(double b);

/// Angular resolution per octant direction; 0 selects it from the multiplier spread.
struct QeQuadrature {
  int n_polar = 0;
  int n_azimuth = 0;
  /// Sum the radial Kummer series per direction instead of the cached interpolant.
  bool direct_radial = false;
};

struct QeMoments {
  Eigen::Vector3d c;    // <q_i^2>
  Eigen::Matrix3d cov;  // Cov(q_i^2, q_j^2) = d c_i / d lambda_j
  double log_Z = 0.0;
};

/// Largest |lambda_i| the quadrature accepts.
inline constexpr double kQeLambdaLimit = 600.0;

QeMoments qe_moments(const Eigen::Vector3d& lambda, double b, const QeQuadrature& quad = {});

inline Eigen::Vector3d qe_forward(const Eigen::Vector3d& lambda, double b) { return qe_moments(lambda, b).c; }

struct NewtonOptions {
  double tol = 1e-11;
  int max_iter = 200;
  std::optional<Eigen::Vector3d> initial;
};

struct NewtonResult {
  Eigen::Vector3d lambda;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves qe_forward(lambda) = c for an admissible c by damped Newton on the convex
/// dual log Z(lambda) - lambda . c. Throws QeError on trace >= 1 or non-convergence.
NewtonResult qe_invert_newton(const Eigen::Vector3d& c, double b, const NewtonOptions& opt = {});

/// Density f_QE(q) for a full symmetric multiplier tensor with normalization log_Z.
double qe_density(const Eigen::Vector3d& q, const Eigen::Matrix3d& lambda, double b, double log_Z);

}  // namespace fene
