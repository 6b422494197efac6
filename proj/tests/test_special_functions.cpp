#include "doctest.h"

#include "fene/special_functions.hpp"

#include <boost/math/special_functions/binomial.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>

using namespace fene;
using quad = boost::multiprecision::cpp_bin_float_quad;

namespace {

// Explicit sum J_n = sum_k C(n+a, n-k) C(n+b, k) ((x-1)/2)^k ((x+1)/2)^(n-k) in quad precision.
quad jacobi_explicit(double a, double b, int n, double x) {
  auto binom = [](quad top, int k) {
    quad r = 1;
    for (int i = 0; i < k; ++i) r = r * (top - i) / (i + 1);
    return r;
  };
  const quad xm = (quad(x) - 1) / 2, xp = (quad(x) + 1) / 2;
  quad sum = 0;
  for (int k = 0; k <= n; ++k) sum += binom(quad(n) + a, n - k) * binom(quad(n) + b, k) * pow(xm, k) * pow(xp, n - k);
  return sum;
}

double beta_moment(double a, double b, int j) {
  // int (1-p)^a (1+p)^(b+j) dp
  return std::exp((a + b + j + 1) * std::log(2.0) + std::lgamma(a + 1) + std::lgamma(b + j + 1) -
                  std::lgamma(a + b + j + 2));
}

}  // namespace

TEST_CASE("jacobi recurrence agrees with the explicit sum to degree 60") {
  for (double a : {0.0, 3.0, 4.0, 5.0}) {
    for (double b : {0.5, 1.5, 7.5}) {
      for (double x : {-0.97, -0.3, 0.0, 0.41, 0.999}) {
        for (int n : {0, 1, 2, 7, 30, 60}) {
          const double ref = static_cast<double>(jacobi_explicit(a, b, n, x));
          const double got = jacobi_eval(a, b, n, x);
          CHECK(std::abs(got - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
        }
      }
    }
  }
}

TEST_CASE("jacobi derivative matches central difference and jacobi_all") {
  const double a = 4.0, b = 1.5;
  for (double x : {-0.8, 0.1, 0.7}) {
    std::vector<double> v, d;
    jacobi_all(a, b, 12, x, v, &d);
    for (int n = 0; n <= 12; ++n) {
      const auto [val, der] = jacobi_eval_with_derivative(a, b, n, x);
      const double h = 1e-6;
      const double fd = (jacobi_eval(a, b, n, x + h) - jacobi_eval(a, b, n, x - h)) / (2 * h);
      CHECK(val == doctest::Approx(v[n]).epsilon(1e-14));
      CHECK(der == doctest::Approx(d[n]).epsilon(1e-12));
      CHECK(std::abs(der - fd) <= 1e-6 * std::max(1.0, std::abs(der)));
    }
  }
}

TEST_CASE("gauss-jacobi rule integrates the beta moments exactly") {
  for (double a : {0.0, 4.0, 5.0, 6.0}) {
    for (double b : {0.0, 0.5}) {
      for (int npts : {1, 5, 20, 48}) {
        const QuadratureRule r = gauss_jacobi_rule(a, b, npts);
        REQUIRE(r.size() == static_cast<std::size_t>(npts));
        for (int j = 0; j < 2 * npts; ++j) {
          double sum = 0.0;
          for (int k = 0; k < npts; ++k) sum += r.weights[k] * std::pow(1.0 + r.nodes[k], j);
          CHECK(sum == doctest::Approx(beta_moment(a, b, j)).epsilon(1e-11));
        }
      }
    }
  }
  CHECK(jacobi_weight_integral(5.0, 0.5) == doctest::Approx(beta_moment(5.0, 0.5, 0)).epsilon(1e-14));
}

TEST_CASE("gauss-jacobi rejects invalid exponents") {
  CHECK_THROWS_AS(gauss_jacobi_rule(-1.0, 0.5, 4), std::invalid_argument);
  CHECK_THROWS_AS(gauss_jacobi_rule(1.0, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(jacobi_eval(0.0, 0.0, -1, 0.0), std::invalid_argument);
}

TEST_CASE("normalized associated legendre functions") {
  const double x = 0.37;
  const double y = std::sqrt(1 - x * x);
  CHECK(assoc_legendre_norm(0, 0, x) == doctest::Approx(std::sqrt(0.5)));
  CHECK(assoc_legendre_norm(1, 0, x) == doctest::Approx(std::sqrt(1.5) * x));
  CHECK(assoc_legendre_norm(1, 1, x) == doctest::Approx(std::sqrt(0.75) * y));
  CHECK(assoc_legendre_norm(2, 0, x) == doctest::Approx(std::sqrt(2.5) * 0.5 * (3 * x * x - 1)));
  CHECK(assoc_legendre_norm(2, 2, x) == doctest::Approx(std::sqrt(15.0 / 16.0) * y * y));
  CHECK_THROWS(assoc_legendre_norm(2, 3, x));

  // orthonormality in x for fixed m
  const int lmax = 20;
  const QuadratureRule gl = gauss_legendre_rule(lmax + 2);
  for (int m = 0; m <= 4; ++m)
    for (int l1 = m; l1 <= lmax; ++l1)
      for (int l2 = m; l2 <= lmax; ++l2) {
        double sum = 0.0;
        for (std::size_t k = 0; k < gl.size(); ++k)
          sum += gl.weights[k] * assoc_legendre_norm(l1, m, gl.nodes[k]) * assoc_legendre_norm(l2, m, gl.nodes[k]);
        CHECK(std::abs(sum - (l1 == l2 ? 1.0 : 0.0)) < 1e-12);
      }
}

TEST_CASE("theta derivative and regular quotient") {
  for (double th : {0.2, 1.1, 2.9}) {
    const LegendreTable t(12, std::cos(th), std::sin(th));
    for (int l = 0; l <= 12; ++l)
      for (int m = 0; m <= l; ++m) {
        const double h = 1e-6;
        const double fd = (assoc_legendre_norm(l, m, std::cos(th + h)) - assoc_legendre_norm(l, m, std::cos(th - h))) / (2 * h);
        CHECK(std::abs(t.dtheta(l, m) - fd) < 1e-7);
        if (m >= 1) CHECK(t.over_sin(l, m) * std::sin(th) == doctest::Approx(t.value(l, m)).epsilon(1e-12));
      }
  }
}

TEST_CASE("real spherical harmonics are orthonormal") {
  const int L = 6, nt = 12, np = 16;
  const QuadratureRule gl = gauss_legendre_rule(nt);
  std::vector<HarmonicIndex> modes;
  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= l; ++m)
      for (int v = 0; v <= (m ? 1 : 0); ++v) modes.push_back({l, m, v});
  for (const auto& a : modes)
    for (const auto& b : modes) {
      double sum = 0.0;
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j) {
          const double th = std::acos(gl.nodes[i]), ph = 2 * std::numbers::pi * j / np;
          sum += gl.weights[i] * (2 * std::numbers::pi / np) * real_spherical_harmonic(a, th, ph) *
                 real_spherical_harmonic(b, th, ph);
        }
      CHECK(std::abs(sum - (a == b ? 1.0 : 0.0)) < 1e-12);
    }
  CHECK_THROWS(real_spherical_harmonic({2, 0, 1}, 0.3, 0.1));
}
