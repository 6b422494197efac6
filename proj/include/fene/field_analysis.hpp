#pragma once

// Reconstruction of f from coefficients, error norms, second moments and
// plot-ready field slices.

#include "fene/fp_solver.hpp"
#include "fene/transform.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace fene {

/// Spherical point (r, theta, phi) with 0 <= r < 1.
struct BallPoint {
  double r, theta, phi;
};

/// h at one point of the mapped domain (p, theta, phi).
double evaluate_h(const Discretization& layout, const Eigen::VectorXd& coeffs, double p, double theta, double phi);

/// f = (1 - r^2)^s h at each point; throws for r >= 1.
std::vector<double> evaluate_f(const Discretization& layout, const Eigen::VectorXd& coeffs,
                               const std::vector<BallPoint>& points);

/// Relative weighted L2 error of the numerical h against h_exact(p, theta, phi), both
/// sampled on the grid (which must use the Gauss-Jacobi(s, 1/2) radial rule).
double weighted_l2_error(const TransformGrid& grid, const Eigen::VectorXd& coeffs,
                         const std::function<double(double, double, double)>& h_exact);

struct ConformationTensor {
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();

  double trace() const { return C.trace(); }
  bool is_symmetric(double tol = 1e-14) const { return (C - C.transpose()).cwiseAbs().maxCoeff() <= tol; }
  bool is_positive_definite() const;
  /// Symmetric, positive definite, 0 < tr C < 1.
  bool is_admissible() const;
};

struct StressTensor {
  Eigen::Matrix3d tau = Eigen::Matrix3d::Zero();
  double N1() const { return tau(0, 0) - tau(1, 1); }
};

/// Moments of the solver field from its l in {0, 2} modes.
class MomentEvaluator {
 public:
  explicit MomentEvaluator(const AssembledOperator& op);

  /// <q q> normalized by the mass of the state.
  ConformationTensor conformation(const Eigen::VectorXd& coeffs) const;
  /// <q q / (1 - |q|^2)>, normalized.
  Eigen::Matrix3d spring_moment(const Eigen::VectorXd& coeffs) const;
  /// b <q q / (1 - |q|^2)> - I.
  StressTensor reference_stress(const Eigen::VectorXd& coeffs) const;

 private:
  Eigen::Matrix3d moment(const Eigen::VectorXd& coeffs, const std::vector<Eigen::VectorXd>& radial) const;

  const AssembledOperator* op_;
  Eigen::VectorXd mass_;
  std::vector<Eigen::VectorXd> mu_qq_, mu_spring_;        // radial moments for l = 0, 2
  std::array<std::vector<Eigen::Matrix3d>, 3> angular_;  // [l/2][local index] integral of Y r_i r_j
};

/// Rescales the state to unit mass.
Eigen::VectorXd renormalize(const AssembledOperator& op, const Eigen::VectorXd& coeffs);

/// Grid over the ball with the plain volume measure: Gauss-Jacobi(0, 1/2) in p.
TransformGrid make_ball_grid(const Discretization& layout, int np, int ntheta, int nphi);

/// Physical f = (1 - r^2)^s h on a ball grid.
Eigen::VectorXd field_on_grid(const TransformGrid& grid, const Eigen::VectorXd& coeffs, double s);

/// ||a - b|| / ||b|| in the grid's quadrature measure.
double relative_l2(const TransformGrid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Number of strict interior local maxima, ignoring bumps below rel_tol * max |v|.
int count_local_maxima(const std::vector<double>& values, double rel_tol = 1e-9);

/// Samples f along the segment t * axis, t in (-1, 1), n points (endpoints excluded).
std::vector<std::pair<double, double>> axis_slice(const std::function<double(const Eigen::Vector3d&)>& f,
                                                  const Eigen::Vector3d& axis, int n);

enum class SliceKind { PlaneQ3, Axis };

struct SliceSpec {
  SliceKind kind = SliceKind::PlaneQ3;
  int resolution = 101;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
};

/// Writes a CSV grid of (q1, q2, q3, f); out-of-ball samples are skipped and counted.
/// Returns the number of skipped samples.
int export_field_grid(const std::string& path, const std::function<double(const Eigen::Vector3d&)>& f,
                      const SliceSpec& spec, const std::string& header_comment = {});

/// f(q) for a solver state (q inside the ball).
std::function<double(const Eigen::Vector3d&)> solver_density(const Discretization& layout,
                                                             const Eigen::VectorXd& coeffs);

}  // namespace fene
