#pragma once

// Conformation-tensor closure models: FENE-P and the quasi-equilibrium closure with
// multipliers from a PLA table or from the network.

#include "fene/field_analysis.hpp"
#include "fene/mlp.hpp"
#include "fene/pla_table.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fene {

enum class ClosureModel { FeneP, QePla, QeNn };

std::string to_string(ClosureModel m);
/// Accepts "fene_p", "qe_pla", "qe_nn".
ClosureModel parse_closure_model(const std::string& name);

/// Inadmissible conformation tensor met during an evaluation or an integration.
class ClosureError : public std::runtime_error {
 public:
  ClosureError(const std::string& msg, long step = -1) : std::runtime_error(msg), step(step) {}
  long step;
};

struct ClosureResources {
  const PlaTable* pla = nullptr;
  const MlpWeights* nn = nullptr;
  /// FENE-P relaxation -(2b/De) C/(1 - tr C) instead of -(b/De) C/(1 - tr C).
  bool fene_p_consistent = false;
};

/// Full multiplier tensor for a QE model: diagonalize C, map the sorted eigenvalues,
/// rotate back. Throws ClosureError for inadmissible C.
Eigen::Matrix3d multiplier_tensor(ClosureModel model, const Eigen::Matrix3d& C, const ClosureResources& res);

Eigen::Matrix3d closure_rhs(ClosureModel model, const Eigen::Matrix3d& C, const Eigen::Matrix3d& K, double De,
                            double b, const ClosureResources& res);

/// FENE-P: b C/(1 - tr C) - I. QE: 2 C lambda, symmetrized.
StressTensor polymer_stress(ClosureModel model, const Eigen::Matrix3d& C, double b, const ClosureResources& res);

/// Fixed point of FENE-P under K = 0: 2/(b+6) I as printed, 1/(b+3) I for the consistent variant.
Eigen::Matrix3d fene_p_equilibrium(double b, bool consistent);

struct ClosureIntegration {
  /// 0 selects 1e-3 De.
  double dt = 0.0;
  double T = 1e3;
  /// Stop once ||dC/dt|| / ||C|| falls below this; 0 disables.
  double steady_tol = 1e-10;
  int record_every = 0;
};

struct ClosureTrajectory {
  Eigen::Matrix3d C;
  double t = 0.0;
  long steps = 0;
  bool steady = false;
  double final_rate = 0.0;
  std::vector<std::pair<double, Eigen::Matrix3d>> history;
};

/// Classical RK4 with fixed step. Symmetry is enforced after each step and the state
/// is checked for admissibility; failures raise ClosureError carrying the step.
ClosureTrajectory integrate_closure(ClosureModel model, const Eigen::Matrix3d& C0, const Eigen::Matrix3d& K,
                                    double De, double b, const ClosureResources& res,
                                    const ClosureIntegration& opt = {});

/// Normalized closure density on the unit ball: f_QE for the QE models, the Gaussian
/// exp(-C^{-1}:qq/2) restricted to the ball for FENE-P. The FENE-P normalization uses
/// the supplied ball grid.
std::function<double(const Eigen::Vector3d&)> closure_density(ClosureModel model, const Eigen::Matrix3d& C,
                                                              double b, const ClosureResources& res,
                                                              const TransformGrid& ball_grid);

}  // namespace fene
