#pragma once

// Galerkin discretization of the weighted Fokker-Planck weak form and its
// semi-implicit BDF2 time march.

#include "fene/angular_coupling.hpp"
#include "fene/radial_basis.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fene {

/// Thrown for invalid user-facing configuration; the message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a run diverges (non-finite state or runaway energy).
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

struct SolverConfig {
  double b = 12.0;
  double s = 6.0;
  double De = 1.0;
  Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
  int L = 10;
  int N = 10;
  double dt = 1e-3;
  BasisKind basis = BasisKind::JG1;
  double t0 = 0.0;
  double T = 1.0;
  /// Permit dt above the energy-stability bound (s < b/2 only).
  bool allow_unstable_dt = false;
  /// Add odd harmonic degrees (JG1 only); used to check parity invariance.
  bool include_odd = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// gamma(s) = (3/4)(1 + (s-1)/3 + 3/(4(s-1))).
double stability_gamma(double s);
/// 3 De / (2 (b - 2s) gamma(s)), or +infinity when s = b/2.
double stability_max_dt(const SolverConfig& cfg);

/// Common factor between the physical (.,.)_s product and the mapped (.,.)_{s,1/2} one.
double mapped_measure_factor(double s);

/// Coefficient layout: degree blocks in ascending l; inside a block, column-major
/// (radial n fastest) over the angular modes (m ascending, v = 0 before v = 1).
class Discretization {
 public:
  explicit Discretization(const SolverConfig& cfg);

  const SolverConfig& config() const { return cfg_; }
  const RadialBasis& basis() const { return basis_; }
  const HarmonicSet& harmonics() const { return harmonics_; }
  const std::vector<int>& degrees() const { return harmonics_.degrees(); }
  int L() const { return cfg_.L; }

  int radial_dim(int l) const { return basis_.radial_dim(l); }
  std::size_t offset(int l) const { return offset_.at(l); }
  std::size_t size() const { return size_; }
  std::size_t index(int l, int m, int v, int n) const;

 private:
  SolverConfig cfg_;
  RadialBasis basis_;
  HarmonicSet harmonics_;
  std::vector<std::size_t> offset_;
  std::size_t size_ = 0;
};

/// Total degrees of freedom for even degrees up to L.
std::size_t degrees_of_freedom(BasisKind kind, int L, int N);

struct SpectralState {
  Eigen::VectorXd coeffs;
  double time = 0.0;
};

/// Time-dependent right-hand side amplitude(t) * load, where load holds the
/// mapped inner products (sigma, phi Y)_{s,1/2} of a fixed profile sigma.
struct Source {
  Eigen::VectorXd load;
  std::function<double(double)> amplitude;
};

class AssembledOperator {
 public:
  explicit AssembledOperator(const SolverConfig& cfg);

  const SolverConfig& config() const { return layout_.config(); }
  const Discretization& layout() const { return layout_; }
  const RadialBlockSet& radial() const { return radial_; }

  /// y = A x (mass matrix, block diagonal in l).
  Eigen::VectorXd apply_mass(const Eigen::VectorXd& x) const;
  /// y = k_ij D_ij x, the explicit convection term in test-function rows.
  Eigen::VectorXd apply_convection(const Eigen::VectorXd& x) const;
  /// y = (B/De + (b-2s)/De C) x.
  Eigen::VectorXd apply_stiffness(const Eigen::VectorXd& x) const;
  /// Solves (c O + B/De + (b-2s)/De C) x = rhs with c = 3/(2dt) (bdf2) or 1/dt.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, bool bdf2) const;
  /// Solves the mass system O x = rhs.
  Eigen::VectorXd solve_mass(const Eigen::VectorXd& rhs) const;

  /// Physical mass integral of f = (1-r^2)^s h.
  double mass(const Eigen::VectorXd& x) const;
  /// ||h||_s^2 in the physical weighted norm.
  double norm_sq(const Eigen::VectorXd& x) const;

 private:
  Discretization layout_;
  RadialBlockSet radial_;
  // per degree: LU of the BDF2 and backward-Euler left-hand sides, and of O
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_bdf2_, lu_euler_, lu_mass_;
  std::vector<Eigen::MatrixXd> mass_;   // O_l^T
  std::vector<Eigen::MatrixXd> stiff_;  // B/De + (b-2s)/De C, acting on columns (test rows)

  struct Coupling {
    int l, lp;
    Eigen::MatrixXd S2t;   // (2 S_{l l'})^T
    Eigen::MatrixXd Oct;   // Ocross_{l l'}^T
    Eigen::SparseMatrix<double> GU;   // sum_ij k_ij U_ij restricted to (l, l'), trial x test
    Eigen::SparseMatrix<double> GVW;  // sum_ij k_ij (V_ij + W_ij)
  };
  std::vector<Coupling> couplings_;
};

/// Mass vector m with mass(x) = m . x (physical normalization).
Eigen::VectorXd mass_vector(const AssembledOperator& op);

/// One backward-Euler step with explicit convection, producing h^1 from h^0.
SpectralState bootstrap_first_step(const SpectralState& h0, const AssembledOperator& op, const Source* source = nullptr);

/// One BDF2 step with extrapolated convection.
SpectralState bdf2_step(const SpectralState& hn, const SpectralState& hnm1, const AssembledOperator& op,
                        const Source* source = nullptr);

struct StepDiagnostics {
  long step = 0;
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;      // ||h^n||^2 + ||2h^n - h^{n-1}||^2
  double mass_residual = 0.0;  // 3M^{n+1} - 4M^n + M^{n-1} - 2 dt * (source mass)
  std::optional<Eigen::Matrix3d> conformation;
};

struct RunOptions {
  /// Optional moment evaluator recorded with each diagnostics row.
  std::function<Eigen::Matrix3d(const Eigen::VectorXd&)> conformation;
  int record_every = 1;
  /// Abort with NumericalFailure when exceeded (seconds); <= 0 disables.
  double wall_clock_budget = 0.0;
  double energy_growth_limit = 1e6;
};

struct RunResult {
  SpectralState final_state;
  SpectralState previous_state;
  std::vector<StepDiagnostics> history;
  long steps = 0;
};

/// Marches from h0 (and h1 if given, else bootstrap) to cfg.T.
RunResult run_simulation(const AssembledOperator& op, const SpectralState& h0, const SpectralState* h1 = nullptr,
                         const Source* source = nullptr, const RunOptions& options = {});

/// Writes step,t,mass,energy[,C11..C33] rows.
void write_diagnostics_csv(const std::string& path, const std::vector<StepDiagnostics>& history,
                           const std::string& header_comment = {});

}  // namespace fene
