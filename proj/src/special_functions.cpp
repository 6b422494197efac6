#include "fene/special_functions.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <string>

namespace fene {

namespace {

void check_exponents(double alpha, double beta) {
  if (!(alpha > -1.0) || !(beta > -1.0)) {
    throw std::invalid_argument("Jacobi exponents must exceed -1 (got alpha=" + std::to_string(alpha) +
                                ", beta=" + std::to_string(beta) + ")");
  }
}

// One step of the recurrence: J_n from J_{n-1}, J_{n-2}.
inline double jacobi_next(double a, double b, int n, double p, double jm1, double jm2) {
  const double s = 2.0 * n + a + b;
  const double c1 = 2.0 * n * (n + a + b) * (s - 2.0);
  const double c2 = (s - 1.0) * (s * (s - 2.0) * p + a * a - b * b);
  const double c3 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * s;
  return (c2 * jm1 - c3 * jm2) / c1;
}

double jacobi_unchecked(double a, double b, int n, double p) {
  if (n == 0) return 1.0;
  double jm2 = 1.0;
  double jm1 = 0.5 * ((a + b + 2.0) * p + (a - b));
  for (int k = 2; k <= n; ++k) {
    const double jn = jacobi_next(a, b, k, p, jm1, jm2);
    jm2 = jm1;
    jm1 = jn;
  }
  return jm1;
}

}  // namespace

void HarmonicIndex::validate() const {
  if (l < 0 || m < 0 || m > l) throw std::invalid_argument("HarmonicIndex requires 0 <= m <= l");
  if (v != 0 && v != 1) throw std::invalid_argument("HarmonicIndex parity flag must be 0 or 1");
  if (v == 1 && m == 0) throw std::invalid_argument("HarmonicIndex with v = 1 requires m >= 1");
}

double jacobi_eval(double alpha, double beta, int n, double p) {
  check_exponents(alpha, beta);
  if (n < 0) throw std::invalid_argument("Jacobi degree must be non-negative");
  return jacobi_unchecked(alpha, beta, n, p);
}

std::pair<double, double> jacobi_eval_with_derivative(double alpha, double beta, int n, double p) {
  check_exponents(alpha, beta);
  if (n < 0) throw std::invalid_argument("Jacobi degree must be non-negative");
  const double value = jacobi_unchecked(alpha, beta, n, p);
  if (n == 0) return {value, 0.0};
  // d/dp J_n^{a,b} = (n+a+b+1)/2 J_{n-1}^{a+1,b+1}
  const double deriv = 0.5 * (n + alpha + beta + 1.0) * jacobi_unchecked(alpha + 1.0, beta + 1.0, n - 1, p);
  return {value, deriv};
}

void jacobi_all(double alpha, double beta, int n, double p, std::vector<double>& values,
                std::vector<double>* derivs) {
  check_exponents(alpha, beta);
  values.assign(static_cast<std::size_t>(n) + 1, 0.0);
  values[0] = 1.0;
  if (n >= 1) values[1] = 0.5 * ((alpha + beta + 2.0) * p + (alpha - beta));
  for (int k = 2; k <= n; ++k) values[k] = jacobi_next(alpha, beta, k, p, values[k - 1], values[k - 2]);
  if (!derivs) return;
  derivs->assign(static_cast<std::size_t>(n) + 1, 0.0);
  if (n == 0) return;
  // Shifted family J^{a+1,b+1}_{k-1} built in place.
  const double a1 = alpha + 1.0, b1 = beta + 1.0;
  double jm2 = 0.0, jm1 = 0.0;
  for (int k = 1; k <= n; ++k) {
    double shifted;
    if (k == 1) {
      shifted = 1.0;
    } else if (k == 2) {
      shifted = 0.5 * ((a1 + b1 + 2.0) * p + (a1 - b1));
    } else {
      shifted = jacobi_next(a1, b1, k - 1, p, jm1, jm2);
    }
    jm2 = jm1;
    jm1 = shifted;
    (*derivs)[k] = 0.5 * (k + alpha + beta + 1.0) * shifted;
  }
}

double jacobi_weight_integral(double alpha, double beta) {
  check_exponents(alpha, beta);
  const double logb = std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) - std::lgamma(alpha + beta + 2.0);
  return std::exp((alpha + beta + 1.0) * std::numbers::ln2 + logb);
}

QuadratureRule gauss_jacobi_rule(double alpha, double beta, int npts) {
  check_exponents(alpha, beta);
  if (npts < 1) throw std::invalid_argument("gauss_jacobi_rule needs at least one point");

  QuadratureRule rule;
  rule.alpha = alpha;
  rule.beta = beta;
  rule.nodes.resize(npts);
  rule.weights.resize(npts);

  // Golub-Welsch for the nodes, then a Newton polish against the recurrence.
  Eigen::VectorXd diag(npts), off(std::max(npts - 1, 1));
  for (int k = 0; k < npts; ++k) {
    const double t = 2.0 * k + alpha + beta;
    diag(k) = (k == 0) ? (beta - alpha) / (alpha + beta + 2.0) : (beta * beta - alpha * alpha) / (t * (t + 2.0));
    if (k + 1 < npts) {
      const double j = k + 1.0, u = 2.0 * j + alpha + beta;
      off(k) = std::sqrt(4.0 * j * (j + alpha) * (j + beta) * (j + alpha + beta) / (u * u * (u + 1.0) * (u - 1.0)));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, off.head(npts - 1), Eigen::EigenvaluesOnly);
  for (int k = 0; k < npts; ++k) {
    double r = eig.eigenvalues()(k);
    for (int it = 0; it < 3; ++it) {
      const auto [j, dj] = jacobi_eval_with_derivative(alpha, beta, npts, r);
      const double delta = -j / dj;
      if (!std::isfinite(delta)) break;
      r += delta;
      if (std::abs(delta) < 1e-16) break;
    }
    rule.nodes[k] = r;
  }

  // w_i = G / ((1 - x_i^2) J_n'(x_i)^2)
  const double n = npts;
  const double logg = (alpha + beta + 1.0) * std::numbers::ln2 + std::lgamma(n + alpha + 1.0) +
                      std::lgamma(n + beta + 1.0) - std::lgamma(n + alpha + beta + 1.0) - std::lgamma(n + 1.0);
  const double g = std::exp(logg);
  for (int k = 0; k < npts; ++k) {
    const double x = rule.nodes[k];
    const double dj = jacobi_eval_with_derivative(alpha, beta, npts, x).second;
    rule.weights[k] = g / ((1.0 - x) * (1.0 + x) * dj * dj);
  }

  for (int k = 1; k < npts; ++k) {
    if (!(rule.nodes[k] > rule.nodes[k - 1])) {
      throw std::runtime_error("gauss_jacobi_rule: node ordering lost (alpha=" + std::to_string(alpha) +
                               ", beta=" + std::to_string(beta) + ", n=" + std::to_string(npts) + ")");
    }
  }
  return rule;
}

LegendreTable::LegendreTable(int lmax, double x, double y) : lmax_(lmax) {
  if (lmax < 0) throw std::invalid_argument("LegendreTable needs lmax >= 0");
  const std::size_t sz = index(lmax, lmax) + 1;
  p_.assign(sz, 0.0);
  dp_.assign(sz, 0.0);
  q_.assign(sz, 0.0);

  // Sectoral seeds; q carries the same seeds without one sin factor.
  p_[0] = std::numbers::sqrt2 / 2.0;
  for (int m = 1; m <= lmax; ++m) {
    const double f = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    q_[index(m, m)] = f * p_[index(m - 1, m - 1)];
    p_[index(m, m)] = y * q_[index(m, m)];
  }
  for (int m = 0; m <= lmax; ++m) {
    if (m + 1 <= lmax) {
      const double f = std::sqrt(2.0 * m + 3.0);
      p_[index(m + 1, m)] = f * x * p_[index(m, m)];
      q_[index(m + 1, m)] = f * x * q_[index(m, m)];
    }
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
      const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                 (4.0 * (l - 1) * (l - 1) - 1.0));
      p_[index(l, m)] = a * (x * p_[index(l - 1, m)] - b * p_[index(l - 2, m)]);
      q_[index(l, m)] = a * (x * q_[index(l - 1, m)] - b * q_[index(l - 2, m)]);
    }
  }
  if (lmax >= 0) {
    for (int l = 0; l <= lmax; ++l) q_[index(l, 0)] = 0.0;
  }

  // d/dtheta P̄_l^0 = -sqrt(l(l+1)) P̄_l^1;
  // d/dtheta P̄_l^m = l x (P̄_l^m/sin) - sqrt((2l+1)(l^2-m^2)/(2l-1)) (P̄_{l-1}^m/sin), m >= 1.
  for (int l = 0; l <= lmax; ++l) {
    dp_[index(l, 0)] = l >= 1 ? -std::sqrt(static_cast<double>(l) * (l + 1)) * p_[index(l, 1)] : 0.0;
    for (int m = 1; m <= l; ++m) {
      double d = l * x * q_[index(l, m)];
      if (l > m) {
        const double k = std::sqrt((2.0 * l + 1.0) * (static_cast<double>(l) * l - static_cast<double>(m) * m) /
                                   (2.0 * l - 1.0));
        d -= k * q_[index(l - 1, m)];
      }
      dp_[index(l, m)] = d;
    }
  }
}

double assoc_legendre_norm(int l, int m, double x) {
  if (l < 0 || m < 0 || m > l) throw std::invalid_argument("assoc_legendre_norm requires 0 <= m <= l");
  if (x < -1.0 || x > 1.0) throw std::invalid_argument("assoc_legendre_norm requires x in [-1, 1]");
  const double y = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  return LegendreTable(l, x, y).value(l, m);
}

std::pair<double, double> assoc_legendre_norm_dtheta(int l, int m, double theta) {
  if (l < 0 || m < 0 || m > l) throw std::invalid_argument("assoc_legendre_norm requires 0 <= m <= l");
  const LegendreTable t(l, std::cos(theta), std::sin(theta));
  return {t.value(l, m), t.dtheta(l, m)};
}

double azimuthal_basis(int m, int v, double phi) {
  if (m == 0) return v == 0 ? 1.0 / std::sqrt(2.0 * std::numbers::pi) : 0.0;
  const double s = 1.0 / std::sqrt(std::numbers::pi);
  return v == 0 ? s * std::cos(m * phi) : s * std::sin(m * phi);
}

double azimuthal_basis_dphi(int m, int v, double phi) {
  if (m == 0) return 0.0;
  const double s = m / std::sqrt(std::numbers::pi);
  return v == 0 ? -s * std::sin(m * phi) : s * std::cos(m * phi);
}

double real_spherical_harmonic(const HarmonicIndex& idx, double theta, double phi) {
  idx.validate();
  const LegendreTable t(idx.l, std::cos(theta), std::sin(theta));
  return t.value(idx.l, idx.m) * azimuthal_basis(idx.m, idx.v, phi);
}

}  // namespace fene
