#include "fene/mms.hpp"

#include "fene/field_analysis.hpp"
#include "fene/transform.hpp"

#include <chrono>
#include <cmath>

namespace fene {

namespace {

double profile(const MmsCase& mc, double p, double theta, double phi) {
  const double r = std::sqrt(0.5 * (1.0 + p));
  const Eigen::Vector3d q =
      r * Eigen::Vector3d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
  return std::exp(0.5 * mc.De * q.dot(mc.K * q));
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

double mms_exact_h(const MmsCase& mc, double p, double theta, double phi, double t) {
  return std::exp(-1.0 / t) * profile(mc, p, theta, phi);
}

MmsResult run_mms(const MmsCase& mc, BasisKind basis, int n, double dt) {
  SolverConfig cfg;
  cfg.b = mc.b;
  cfg.s = mc.s;
  cfg.De = mc.De;
  cfg.K = mc.K;
  cfg.L = n;
  cfg.N = n;
  cfg.dt = dt;
  cfg.basis = basis;
  cfg.t0 = mc.t0;
  cfg.T = mc.T;
  cfg.validate();

  MmsResult res;
  res.basis = basis;
  res.N = n;
  res.dt = dt;
  const auto start = std::chrono::steady_clock::now();
  const AssembledOperator op(cfg);
  const TransformGrid grid(op.layout());
  const auto H = [&](double p, double th, double ph) { return profile(mc, p, th, ph); };
  const Eigen::VectorXd load = load_vector(op, H, &grid);
  const Eigen::VectorXd hc = op.solve_mass(load);
  res.assembly_seconds = seconds_since(start);
  res.dof = op.layout().size();

  const auto g = [](double t) { return std::exp(-1.0 / t); };
  const SpectralState h0{g(mc.t0) * hc, mc.t0}, h1{g(mc.t0 + dt) * hc, mc.t0 + dt};
  const Source src{load, [](double t) { return std::exp(-1.0 / t) / (t * t); }};
  const auto march = std::chrono::steady_clock::now();
  const RunResult run = run_simulation(op, h0, &h1, &src);
  res.seconds = seconds_since(march);
  res.steps = run.steps;
  for (const auto& d : run.history) res.max_mass_residual = std::max(res.max_mass_residual, std::abs(d.mass_residual));

  const double t = run.final_state.time;
  res.error = weighted_l2_error(grid, run.final_state.coeffs, [&](double p, double th, double ph) {
    return mms_exact_h(mc, p, th, ph, t);
  });
  res.projection_error = weighted_l2_error(grid, hc, H);
  return res;
}

}  // namespace fene
