#pragma once

// Jacobi polynomials, Gauss-Jacobi rules, normalized associated Legendre
// functions and real spherical harmonics.

#include <stdexcept>
#include <utility>
#include <vector>

namespace fene {

/// Gauss rule for the weight (1-p)^alpha (1+p)^beta on (-1, 1).
struct QuadratureRule {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // all positive

  std::size_t size() const { return nodes.size(); }
};

/// Degree l >= 0, order 0 <= m <= l, parity flag v (1 = sin branch, needs m >= 1).
struct HarmonicIndex {
  int l = 0;
  int m = 0;
  int v = 0;

  void validate() const;
  friend bool operator==(const HarmonicIndex&, const HarmonicIndex&) = default;
};

/// J_n^{alpha,beta}(p) by the three-term recurrence.
double jacobi_eval(double alpha, double beta, int n, double p);

/// Value and first derivative of J_n^{alpha,beta}(p).
std::pair<double, double> jacobi_eval_with_derivative(double alpha, double beta, int n, double p);

/// Fills values[k] = J_k(p) and (optionally) derivs[k] = J_k'(p) for k = 0..n.
void jacobi_all(double alpha, double beta, int n, double p, std::vector<double>& values,
                std::vector<double>* derivs = nullptr);

/// Exact for polynomials of degree <= 2*npts-1 against (1-p)^alpha (1+p)^beta.
/// Nodes by deflated Newton iteration from Chebyshev guesses.
QuadratureRule gauss_jacobi_rule(double alpha, double beta, int npts);

inline QuadratureRule gauss_legendre_rule(int npts) { return gauss_jacobi_rule(0.0, 0.0, npts); }

/// Integral of the Jacobi weight: 2^{a+b+1} B(a+1, b+1).
double jacobi_weight_integral(double alpha, double beta);

/// P̄_l^m(x) = C_l^m P_l^m(x), C_l^m = sqrt((2l+1)(l-m)!/(2(l+m)!)).
/// No Condon-Shortley phase: P̄_l^l >= 0 on [-1, 1].
double assoc_legendre_norm(int l, int m, double x);

/// Value and d/dtheta of P̄_l^m(cos theta).
std::pair<double, double> assoc_legendre_norm_dtheta(int l, int m, double theta);

/// All P̄_l^m(cos theta) for l <= lmax at a single angle, with theta-derivatives and
/// the regular quotient P̄_l^m / sin(theta) (m >= 1). The quotient comes from the same
/// recurrence seeded without the sin factor, so it is finite at the poles.
class LegendreTable {
 public:
  LegendreTable() = default;
  LegendreTable(int lmax, double cos_theta, double sin_theta);

  int lmax() const { return lmax_; }
  double value(int l, int m) const { return p_[index(l, m)]; }
  double dtheta(int l, int m) const { return dp_[index(l, m)]; }
  /// P̄_l^m / sin(theta); zero for m = 0 (not defined there, never requested).
  double over_sin(int l, int m) const { return q_[index(l, m)]; }

  static std::size_t index(int l, int m) { return static_cast<std::size_t>(l) * (l + 1) / 2 + m; }

 private:
  int lmax_ = -1;
  std::vector<double> p_, dp_, q_;
};

/// e_m^v(phi): 1/sqrt(2 pi) for m = 0, cos(m phi)/sqrt(pi) for v = 0, sin(m phi)/sqrt(pi) for v = 1.
double azimuthal_basis(int m, int v, double phi);
/// d/dphi of azimuthal_basis.
double azimuthal_basis_dphi(int m, int v, double phi);

/// Y_{lm}^v(theta, phi) = P̄_l^m(cos theta) e_m^v(phi); orthonormal on the sphere.
double real_spherical_harmonic(const HarmonicIndex& idx, double theta, double phi);

}  // namespace fene
