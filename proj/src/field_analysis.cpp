#include "fene/field_analysis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace fene {

namespace {

int order_of(int a) { return a == 0 ? 0 : (a + 1) / 2; }
int parity_of(int a) { return a == 0 ? 0 : (a + 1) % 2; }

}  // namespace

double evaluate_h(const Discretization& layout, const Eigen::VectorXd& coeffs, double p, double theta, double phi) {
  const int L = layout.L();
  const LegendreTable t(L, std::cos(theta), std::sin(theta));
  std::vector<double> rad;
  double sum = 0.0;
  for (int l : layout.degrees()) {
    layout.basis().eval_all(l, p, rad);
    const int dim = layout.radial_dim(l);
    for (int a = 0; a < 2 * l + 1; ++a) {
      const int m = order_of(a);
      const double ang = t.value(l, m) * azimuthal_basis(m, parity_of(a), phi);
      if (ang == 0.0) continue;
      const double* c = coeffs.data() + layout.offset(l) + static_cast<std::size_t>(a) * dim;
      double r = 0.0;
      for (int n = 0; n < dim; ++n) r += c[n] * rad[n];
      sum += r * ang;
    }
  }
  return sum;
}

std::vector<double> evaluate_f(const Discretization& layout, const Eigen::VectorXd& coeffs,
                               const std::vector<BallPoint>& points) {
  const double s = layout.config().s;
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& pt : points) {
    if (!(pt.r >= 0.0) || !(pt.r < 1.0)) throw std::invalid_argument("evaluate_f: point outside the open unit ball");
    const double p = 2.0 * pt.r * pt.r - 1.0;
    out.push_back(std::pow(1.0 - pt.r * pt.r, s) * evaluate_h(layout, coeffs, p, pt.theta, pt.phi));
  }
  return out;
}

double weighted_l2_error(const TransformGrid& grid, const Eigen::VectorXd& coeffs,
                         const std::function<double(double, double, double)>& h_exact) {
  const Eigen::VectorXd num = grid.synthesis(coeffs);
  const Eigen::VectorXd ex = grid.sample(h_exact);
  const double den = grid.integrate(ex.array().square().matrix());
  if (!(den > 0.0)) throw std::invalid_argument("weighted_l2_error: reference has zero norm");
  return std::sqrt(grid.integrate((num - ex).array().square().matrix()) / den);
}

bool ConformationTensor::is_positive_definite() const {
  const Eigen::Matrix3d sym = 0.5 * (C + C.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() > 0.0;
}

bool ConformationTensor::is_admissible() const {
  return is_symmetric(1e-12) && is_positive_definite() && trace() > 0.0 && trace() < 1.0;
}

MomentEvaluator::MomentEvaluator(const AssembledOperator& op) : op_(&op), mass_(mass_vector(op)) {
  const Discretization& d = op.layout();
  const double s = d.config().s;
  const double c0 = mapped_measure_factor(s);
  const int npts = d.config().N + 8;
  const QuadratureRule rs = gauss_jacobi_rule(s, 0.5, npts);
  const QuadratureRule rs1 = gauss_jacobi_rule(s - 1.0, 0.5, npts);
  for (int l : {0, 2}) {
    if (!d.harmonics().contains_degree(l)) {
      mu_qq_.emplace_back();
      mu_spring_.emplace_back();
      continue;
    }
    Eigen::MatrixXd v;
    d.basis().tabulate(l, rs.nodes, v, nullptr);
    Eigen::VectorXd w(npts);
    // r^2 = (1+p)/2
    for (int k = 0; k < npts; ++k) w(k) = c0 * rs.weights[k] * 0.5 * (1.0 + rs.nodes[k]);
    mu_qq_.push_back(v.transpose() * w);
    d.basis().tabulate(l, rs1.nodes, v, nullptr);
    // r^2 / (1 - r^2) (1-p)^s = (1+p) (1-p)^{s-1}
    for (int k = 0; k < npts; ++k) w(k) = c0 * rs1.weights[k] * (1.0 + rs1.nodes[k]);
    mu_spring_.push_back(v.transpose() * w);
  }
  // integral of Y_a r_i r_j over the sphere; degree <= 4 integrands
  const QuadratureRule gl = gauss_legendre_rule(6);
  const int nph = 8;
  for (int l : {0, 2}) {
    auto& A = angular_[l / 2];
    A.assign(2 * l + 1, Eigen::Matrix3d::Zero());
    for (std::size_t it = 0; it < gl.size(); ++it) {
      const double x = gl.nodes[it], st = std::sqrt(1.0 - x * x);
      const LegendreTable t(l, x, st);
      for (int k = 0; k < nph; ++k) {
        const double ph = 2.0 * std::numbers::pi * k / nph;
        const Eigen::Vector3d r(st * std::cos(ph), st * std::sin(ph), x);
        const double w = gl.weights[it] * 2.0 * std::numbers::pi / nph;
        for (int a = 0; a < 2 * l + 1; ++a)
          A[a] += w * t.value(l, order_of(a)) * azimuthal_basis(order_of(a), parity_of(a), ph) * (r * r.transpose());
      }
    }
  }
}

Eigen::Matrix3d MomentEvaluator::moment(const Eigen::VectorXd& coeffs, const std::vector<Eigen::VectorXd>& radial) const {
  const Discretization& d = op_->layout();
  const double mass = mass_.dot(coeffs);
  if (!(std::abs(mass) > 0.0)) throw std::invalid_argument("moment of a zero-mass state");
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  for (int l : {0, 2}) {
    if (!d.harmonics().contains_degree(l)) continue;
    const int dim = d.radial_dim(l);
    for (int a = 0; a < 2 * l + 1; ++a) {
      const Eigen::Map<const Eigen::VectorXd> c(coeffs.data() + d.offset(l) + static_cast<std::size_t>(a) * dim, dim);
      M += c.dot(radial[l / 2]) * angular_[l / 2][a];
    }
  }
  return M / mass;
}

ConformationTensor MomentEvaluator::conformation(const Eigen::VectorXd& coeffs) const {
  ConformationTensor ct;
  ct.C = moment(coeffs, mu_qq_);
  ct.C = 0.5 * (ct.C + ct.C.transpose());
  return ct;
}

Eigen::Matrix3d MomentEvaluator::spring_moment(const Eigen::VectorXd& coeffs) const {
  const Eigen::Matrix3d m = moment(coeffs, mu_spring_);
  return 0.5 * (m + m.transpose());
}

StressTensor MomentEvaluator::reference_stress(const Eigen::VectorXd& coeffs) const {
  StressTensor st;
  st.tau = op_->config().b * spring_moment(coeffs) - Eigen::Matrix3d::Identity();
  return st;
}

Eigen::VectorXd renormalize(const AssembledOperator& op, const Eigen::VectorXd& coeffs) {
  const double m = op.mass(coeffs);
  if (!(std::abs(m) > 0.0)) throw std::invalid_argument("cannot renormalize a zero-mass state");
  return coeffs / m;
}

TransformGrid make_ball_grid(const Discretization& layout, int np, int ntheta, int nphi) {
  // r^2 dr = 2^{-5/2} (1+p)^{1/2} dp
  QuadratureRule rule = gauss_jacobi_rule(0.0, 0.5, np);
  for (double& w : rule.weights) w *= std::pow(2.0, -2.5);
  return TransformGrid(layout, rule, ntheta, nphi);
}

Eigen::VectorXd field_on_grid(const TransformGrid& grid, const Eigen::VectorXd& coeffs, double s) {
  Eigen::VectorXd v = grid.synthesis(coeffs);
  for (int ip = 0; ip < grid.np(); ++ip) {
    const double w = std::pow(0.5 * (1.0 - grid.p_nodes()[ip]), s);
    for (int it = 0; it < grid.ntheta(); ++it)
      for (int k = 0; k < grid.nphi(); ++k) v(static_cast<Eigen::Index>(grid.flat(ip, it, k))) *= w;
  }
  return v;
}

double relative_l2(const TransformGrid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double den = grid.integrate(b.array().square().matrix());
  if (!(den > 0.0)) throw std::invalid_argument("relative_l2: reference has zero norm");
  return std::sqrt(grid.integrate((a - b).array().square().matrix()) / den);
}

int count_local_maxima(const std::vector<double>& values, double rel_tol) {
  if (values.size() < 3) return 0;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, std::abs(v));
  const double tol = rel_tol * vmax;
  // plateau-aware: a run of near-equal values counts once if both sides drop
  int count = 0;
  std::size_t i = 1;
  while (i + 1 < values.size()) {
    if (values[i] > values[i - 1] + tol) {
      std::size_t j = i;
      while (j + 1 < values.size() && std::abs(values[j + 1] - values[i]) <= tol) ++j;
      if (j + 1 < values.size() && values[j + 1] < values[j] - tol) ++count;
      i = j + 1;
    } else {
      ++i;
    }
  }
  return count;
}

std::vector<std::pair<double, double>> axis_slice(const std::function<double(const Eigen::Vector3d&)>& f,
                                                  const Eigen::Vector3d& axis, int n) {
  if (n < 1) throw std::invalid_argument("axis_slice needs n >= 1");
  const Eigen::Vector3d u = axis.normalized();
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = -1.0 + 2.0 * (i + 1) / (n + 1);
    out.emplace_back(t, f(t * u));
  }
  return out;
}

int export_field_grid(const std::string& path, const std::function<double(const Eigen::Vector3d&)>& f,
                      const SliceSpec& spec, const std::string& header_comment) {
  if (spec.resolution < 2) throw std::invalid_argument("slice resolution must be at least 2");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (!header_comment.empty()) out << header_comment;
  out << "q1,q2,q3,f\n" << std::setprecision(17);
  int skipped = 0;
  const int n = spec.resolution;
  auto emit = [&](const Eigen::Vector3d& q) {
    if (q.norm() >= 1.0) {
      ++skipped;
      return;
    }
    out << q(0) << ',' << q(1) << ',' << q(2) << ',' << f(q) << "\n";
  };
  if (spec.kind == SliceKind::PlaneQ3) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) emit({-1.0 + 2.0 * i / (n - 1), -1.0 + 2.0 * j / (n - 1), 0.0});
  } else {
    const Eigen::Vector3d u = spec.axis.normalized();
    for (int i = 0; i < n; ++i) emit((-1.0 + 2.0 * i / (n - 1)) * u);
  }
  if (skipped > 0) out << "# skipped " << skipped << " samples outside the unit ball\n";
  return skipped;
}

std::function<double(const Eigen::Vector3d&)> solver_density(const Discretization& layout,
                                                             const Eigen::VectorXd& coeffs) {
  return [&layout, coeffs](const Eigen::Vector3d& q) {
    const double r = q.norm();
    const double theta = r > 0.0 ? std::acos(std::clamp(q(2) / r, -1.0, 1.0)) : 0.0;
    const double phi = std::atan2(q(1), q(0));
    return evaluate_f(layout, coeffs, {{r, theta, phi}}).front();
  };
}

}  // namespace fene
