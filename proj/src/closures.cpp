#include "fene/closures.hpp"

#include "fene/qe_map.hpp"
#include "fene/tensor3.hpp"

#include <cmath>
#include <sstream>

namespace fene {

namespace {

void require_admissible(const Eigen::Matrix3d& C, const char* where) {
  if (!conformation_admissible(C, 1e-10)) {
    std::ostringstream os;
    os << where << ": inadmissible conformation tensor (trace " << C.trace() << ")";
    throw ClosureError(os.str());
  }
}

double ball_integral(const TransformGrid& g, const std::function<double(const Eigen::Vector3d&)>& f) {
  const Eigen::VectorXd vals = g.sample([&](double p, double th, double ph) {
    const double r = std::sqrt(0.5 * (1.0 + p));
    return f(r * Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
  });
  return g.integrate(vals);
}

}  // namespace

std::string to_string(ClosureModel m) {
  switch (m) {
    case ClosureModel::FeneP: return "fene_p";
    case ClosureModel::QePla: return "qe_pla";
    case ClosureModel::QeNn: return "qe_nn";
  }
  return "?";
}

ClosureModel parse_closure_model(const std::string& name) {
  if (name == "fene_p") return ClosureModel::FeneP;
  if (name == "qe_pla") return ClosureModel::QePla;
  if (name == "qe_nn") return ClosureModel::QeNn;
  throw std::invalid_argument("model: unknown closure \"" + name + "\" (expected fene_p, qe_pla or qe_nn)");
}

Eigen::Matrix3d multiplier_tensor(ClosureModel model, const Eigen::Matrix3d& C, const ClosureResources& res) {
  require_admissible(C, "multiplier_tensor");
  const SymEig e = sym_eig3(C);
  Eigen::Vector3d lam;
  switch (model) {
    case ClosureModel::QePla:
      if (!res.pla) throw std::invalid_argument("multiplier_tensor: QE-PLA needs a table");
      lam = res.pla->lookup(e.values);
      break;
    case ClosureModel::QeNn:
      if (!res.nn) throw std::invalid_argument("multiplier_tensor: QE-NN needs weights");
      lam = nn_infer(*res.nn, e.values);
      break;
    case ClosureModel::FeneP:
      throw std::invalid_argument("multiplier_tensor: FENE-P has no multipliers");
  }
  return from_eigen(e.vectors, lam);
}

Eigen::Matrix3d fene_p_equilibrium(double b, bool consistent) {
  return (consistent ? 1.0 / (b + 3.0) : 2.0 / (b + 6.0)) * Eigen::Matrix3d::Identity();
}

Eigen::Matrix3d closure_rhs(ClosureModel model, const Eigen::Matrix3d& C, const Eigen::Matrix3d& K, double De,
                            double b, const ClosureResources& res) {
  const Eigen::Matrix3d flow = K * C + C * K.transpose();
  if (model == ClosureModel::FeneP) {
    require_admissible(C, "closure_rhs");
    const double coef = (res.fene_p_consistent ? 2.0 : 1.0) * b / (De * (1.0 - C.trace()));
    return symmetrize(flow + (2.0 / De) * Eigen::Matrix3d::Identity() - coef * C);
  }
  const Eigen::Matrix3d lam = multiplier_tensor(model, C, res);
  return symmetrize(flow - (4.0 / De) * C * lam);
}

StressTensor polymer_stress(ClosureModel model, const Eigen::Matrix3d& C, double b, const ClosureResources& res) {
  StressTensor s;
  if (model == ClosureModel::FeneP) {
    if (!(C.trace() < 1.0)) throw ClosureError("polymer_stress: trace of C must be below 1");
    s.tau = b * C / (1.0 - C.trace()) - Eigen::Matrix3d::Identity();
  } else {
    s.tau = symmetrize(2.0 * C * multiplier_tensor(model, C, res));
  }
  return s;
}

ClosureTrajectory integrate_closure(ClosureModel model, const Eigen::Matrix3d& C0, const Eigen::Matrix3d& K,
                                    double De, double b, const ClosureResources& res,
                                    const ClosureIntegration& opt) {
  if (!conformation_admissible(C0, 1e-10)) throw ClosureError("integrate_closure: initial state inadmissible", 0);
  const double dt = opt.dt > 0.0 ? opt.dt : 1e-3 * De;
  const long nsteps = static_cast<long>(std::ceil(opt.T / dt - 1e-9));
  ClosureTrajectory out;
  out.C = symmetrize(C0);
  if (opt.record_every > 0) out.history.emplace_back(0.0, out.C);
  auto rhs = [&](const Eigen::Matrix3d& C) { return closure_rhs(model, C, K, De, b, res); };
  for (long n = 1; n <= nsteps; ++n) {
    Eigen::Matrix3d next;
    try {
      const Eigen::Matrix3d k1 = rhs(out.C);
      out.final_rate = k1.norm() / out.C.norm();
      if (opt.steady_tol > 0.0 && out.final_rate < opt.steady_tol) {
        out.steady = true;
        break;
      }
      const Eigen::Matrix3d k2 = rhs(out.C + 0.5 * dt * k1);
      const Eigen::Matrix3d k3 = rhs(out.C + 0.5 * dt * k2);
      const Eigen::Matrix3d k4 = rhs(out.C + dt * k3);
      next = symmetrize(out.C + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    } catch (const ClosureError& e) {
      throw ClosureError(std::string(e.what()) + " at step " + std::to_string(n), n);
    }
    if (!conformation_admissible(next, 1e-10)) {
      std::ostringstream os;
      os << to_string(model) << " lost admissibility at step " << n << " (t = " << n * dt << ")";
      throw ClosureError(os.str(), n);
    }
    out.C = next;
    out.t = n * dt;
    out.steps = n;
    if (opt.record_every > 0 && n % opt.record_every == 0) out.history.emplace_back(out.t, out.C);
  }
  return out;
}

std::function<double(const Eigen::Vector3d&)> closure_density(ClosureModel model, const Eigen::Matrix3d& C,
                                                              double b, const ClosureResources& res,
                                                              const TransformGrid& ball_grid) {
  if (model == ClosureModel::FeneP) {
    require_admissible(C, "closure_density");
    const Eigen::Matrix3d A = 0.5 * C.inverse();
    auto g = [A](const Eigen::Vector3d& q) { return q.squaredNorm() < 1.0 ? std::exp(-q.dot(A * q)) : 0.0; };
    const double Z = ball_integral(ball_grid, g);
    return [g, Z](const Eigen::Vector3d& q) { return g(q) / Z; };
  }
  const Eigen::Matrix3d lam = multiplier_tensor(model, C, res);
  const Eigen::Vector3d ev = sym_eig3(lam).values;
  const double log_Z = qe_moments(ev, b).log_Z;
  return [lam, b, log_Z](const Eigen::Vector3d& q) { return qe_density(q, lam, b, log_Z); };
}

}  // namespace fene
