#pragma once

// Manufactured-solution convergence harness: h = exp(-1/t) exp((De/2) q.K.q)
// solves the weighted equation with source t^-2 exp(-1/t) f_eq^D.

#include "fene/fp_solver.hpp"

namespace fene {

struct MmsCase {
  double b = 12.0;
  double s = 6.0;
  double De = 24.0;
  Eigen::Matrix3d K = Eigen::Vector3d(1.0, -1.0, 0.0).asDiagonal();
  double t0 = 0.5;
  double T = 1.0;
};

struct MmsResult {
  BasisKind basis = BasisKind::JG1;
  int N = 0;
  std::size_t dof = 0;
  double dt = 0.0;
  double error = 0.0;             // relative weighted L2 at T
  double projection_error = 0.0;  // same norm for the projected exact field
  double max_mass_residual = 0.0;
  long steps = 0;
  double assembly_seconds = 0.0;
  double seconds = 0.0;  // time stepping only
};

/// The exact h at (p, theta, phi) and time t.
double mms_exact_h(const MmsCase& mc, double p, double theta, double phi, double t);

/// Runs M = N = n from the exact two starting levels to T.
MmsResult run_mms(const MmsCase& mc, BasisKind basis, int n, double dt);

}  // namespace fene
