#pragma once

// Steady spectral reference solutions and closure-model comparisons against them.

#include "fene/closures.hpp"
#include "fene/field_analysis.hpp"
#include "fene/fp_solver.hpp"
#include "fene/transform.hpp"

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace fene {

/// Planar extension u = (kappa x, -kappa y, 0).
Eigen::Matrix3d extensional_flow(double kappa);
/// Extension plus shear u = (x + kappa y, -y, 0).
Eigen::Matrix3d mixed_flow(double kappa);

struct SteadyOptions {
  /// Stop once ||h^{n+1} - h^n||_s / (dt ||h^{n+1}||_s) falls below tol.
  double tol = 1e-10;
  double t_max = 500.0;
  /// Seconds; 0 disables.
  double wall_clock_budget = 0.0;
};

struct SteadyResult {
  Eigen::VectorXd coeffs;  // renormalized to unit mass
  double t = 0.0;
  long steps = 0;
  double rate = 0.0;
  bool converged = false;
  double seconds = 0.0;  // time stepping only
};

/// Projection of the equilibrium density C_eq (1 - r^2)^{b/2} onto the basis.
SpectralState equilibrium_state(const AssembledOperator& op);

/// Marches BDF2 from equilibrium until the relative change per unit time is below tol.
SteadyResult solve_steady(const AssembledOperator& op, const SteadyOptions& opt = {});

/// Spectral steady state with the quantities the closure comparisons need.
struct Reference {
  std::shared_ptr<const AssembledOperator> op;
  SteadyResult steady;
  ConformationTensor C;
  StressTensor stress;
  /// Unweighted ball quadrature used by the CDF error, and f sampled on it.
  std::shared_ptr<const TransformGrid> ball;
  Eigen::VectorXd f_ball;
  double assembly_seconds = 0.0;
};

/// Ball grid sizes default to N + 40, L + 40, 2L + 80.
Reference compute_reference(const SolverConfig& cfg, const SteadyOptions& opt = {}, int np = 0, int ntheta = 0,
                            int nphi = 0);

struct ClosureComparison {
  ClosureModel model = ClosureModel::FeneP;
  bool ok = false;
  std::string failure;
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  StressTensor stress;
  double cdf_error = 0.0;
  /// |tau12 - tau12_ref| and |N1 - N1_ref|.
  double tau12_error = 0.0;
  double N1_error = 0.0;
  double seconds = 0.0;  // closure integration only
  long steps = 0;
  bool steady = false;
};

/// Integrates the closure from its equilibrium to steady state under the reference's
/// flow and compares CDF and stress. Failures of the closure are reported, not thrown.
ClosureComparison compare_closure(ClosureModel model, const Reference& ref, const ClosureResources& res,
                                  const ClosureIntegration& opt = {});

/// Closure density along a line through the origin, for slice comparisons.
std::vector<std::pair<double, double>> closure_slice(ClosureModel model, const Eigen::Matrix3d& C, double b,
                                                     const ClosureResources& res, const TransformGrid& ball,
                                                     const Eigen::Vector3d& axis, int n);

}  // namespace fene
