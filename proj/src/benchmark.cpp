#include "fene/benchmark.hpp"

#include "fene/qe_map.hpp"

#include <chrono>
#include <cmath>

namespace fene {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd sample_density(const TransformGrid& g, const std::function<double(const Eigen::Vector3d&)>& f) {
  return g.sample([&](double p, double th, double ph) {
    const double r = std::sqrt(0.5 * (1.0 + p));
    return f(r * Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
  });
}

}  // namespace

Eigen::Matrix3d extensional_flow(double kappa) {
  Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
  K(0, 0) = kappa;
  K(1, 1) = -kappa;
  return K;
}

Eigen::Matrix3d mixed_flow(double kappa) {
  Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
  K(0, 0) = 1.0;
  K(1, 1) = -1.0;
  K(0, 1) = kappa;
  return K;
}

SpectralState equilibrium_state(const AssembledOperator& op) {
  const SolverConfig& cfg = op.config();
  const double ceq = equilibrium_constant(cfg.b), e = 0.5 * cfg.b - cfg.s;
  SpectralState h = project_function(op, [&](double p, double, double) { return ceq * std::pow(0.5 * (1.0 - p), e); });
  h.time = 0.0;
  return h;
}

SteadyResult solve_steady(const AssembledOperator& op, const SteadyOptions& opt) {
  const double dt = op.config().dt;
  const auto start = std::chrono::steady_clock::now();
  SteadyResult out;
  SpectralState prev = equilibrium_state(op);
  SpectralState cur = bootstrap_first_step(prev, op);
  out.steps = 1;
  while (true) {
    const double change = std::sqrt(op.norm_sq(cur.coeffs - prev.coeffs));
    out.rate = change / (dt * std::sqrt(op.norm_sq(cur.coeffs)));
    if (out.rate < opt.tol) {
      out.converged = true;
      break;
    }
    if (cur.time >= opt.t_max) break;
    if (opt.wall_clock_budget > 0.0 && seconds_since(start) > opt.wall_clock_budget) break;
    SpectralState next = bdf2_step(cur, prev, op);
    prev = std::move(cur);
    cur = std::move(next);
    ++out.steps;
  }
  out.t = cur.time;
  out.coeffs = renormalize(op, cur.coeffs);
  out.seconds = seconds_since(start);
  return out;
}

Reference compute_reference(const SolverConfig& cfg, const SteadyOptions& opt, int np, int ntheta, int nphi) {
  Reference ref;
  const auto t0 = std::chrono::steady_clock::now();
  ref.op = std::make_shared<const AssembledOperator>(cfg);
  ref.assembly_seconds = seconds_since(t0);
  ref.steady = solve_steady(*ref.op, opt);
  const MomentEvaluator moments(*ref.op);
  ref.C = moments.conformation(ref.steady.coeffs);
  ref.stress = moments.reference_stress(ref.steady.coeffs);
  ref.ball = std::make_shared<const TransformGrid>(make_ball_grid(ref.op->layout(), np > 0 ? np : cfg.N + 40,
                                                                  ntheta > 0 ? ntheta : cfg.L + 40,
                                                                  nphi > 0 ? nphi : 2 * cfg.L + 80));
  ref.f_ball = field_on_grid(*ref.ball, ref.steady.coeffs, cfg.s);
  return ref;
}

ClosureComparison compare_closure(ClosureModel model, const Reference& ref, const ClosureResources& res,
                                  const ClosureIntegration& opt) {
  const SolverConfig& cfg = ref.op->config();
  ClosureComparison out;
  out.model = model;
  const Eigen::Matrix3d C0 = model == ClosureModel::FeneP ? fene_p_equilibrium(cfg.b, res.fene_p_consistent)
                                                          : Eigen::Matrix3d::Identity() / (cfg.b + 5.0);
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const ClosureTrajectory tr = integrate_closure(model, C0, cfg.K, cfg.De, cfg.b, res, opt);
    out.seconds = seconds_since(t0);
    out.C = tr.C;
    out.steps = tr.steps;
    out.steady = tr.steady;
    out.stress = polymer_stress(model, tr.C, cfg.b, res);
    const auto f = closure_density(model, tr.C, cfg.b, res, *ref.ball);
    out.cdf_error = relative_l2(*ref.ball, sample_density(*ref.ball, f), ref.f_ball);
    out.tau12_error = std::abs(out.stress.tau(0, 1) - ref.stress.tau(0, 1));
    out.N1_error = std::abs(out.stress.N1() - ref.stress.N1());
    out.ok = true;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

std::vector<std::pair<double, double>> closure_slice(ClosureModel model, const Eigen::Matrix3d& C, double b,
                                                     const ClosureResources& res, const TransformGrid& ball,
                                                     const Eigen::Vector3d& axis, int n) {
  return axis_slice(closure_density(model, C, b, res, ball), axis, n);
}

}  // namespace fene
