#include "doctest.h"

#include "fene/qe_map.hpp"
#include "fene/special_functions.hpp"
#include "fene/tensor3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace fene;

namespace {

// <q_i^2> under (1-|q|^2)^{b/2} exp(sum lambda_i q_i^2) by a plain spherical tensor rule
Eigen::Vector3d brute_moments(const Eigen::Vector3d& lam, double b) {
  const QuadratureRule rr = gauss_legendre_rule(120), rt = gauss_legendre_rule(120);
  const int nph = 240;
  double Z = 0.0;
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < rr.size(); ++i) {
    const double r = 0.5 * (rr.nodes[i] + 1.0);
    for (std::size_t j = 0; j < rt.size(); ++j) {
      const double ct = rt.nodes[j], st = std::sqrt(1.0 - ct * ct);
      for (int k = 0; k < nph; ++k) {
        const double ph = 2.0 * std::numbers::pi * (k + 0.5) / nph;
        const Eigen::Vector3d q = r * Eigen::Vector3d(st * std::cos(ph), st * std::sin(ph), ct);
        const Eigen::Vector3d q2 = q.cwiseProduct(q);
        const double w = 0.5 * rr.weights[i] * rt.weights[j] * r * r *
                         std::exp(0.5 * b * std::log1p(-r * r) + lam.dot(q2));
        Z += w;
        m += w * q2;
      }
    }
  }
  return m / Z;
}

Eigen::Vector3d random_admissible(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double t = 0.05 + 0.85 * U(rng);
  Eigen::Vector3d w(0.02 + U(rng), 0.02 + U(rng), 0.02 + U(rng));
  w /= w.sum();
  Eigen::Vector3d c = t * w;
  std::sort(c.data(), c.data() + 3, std::greater<double>());
  return c;
}

}  // namespace

TEST_CASE("equilibrium constant is the Gamma ratio and integrates the density to one half") {
  CHECK(equilibrium_constant(12.0) == doctest::Approx(1.7502).epsilon(1e-4));
  for (double b : {4.0, 12.0, 50.0}) {
    // int (1-r^2)^{b/2} dq = 4 pi int_0^1 r^2 (1-r^2)^{b/2} dr, by Gauss-Legendre in r
    const QuadratureRule g = gauss_legendre_rule(200);
    double I = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = 0.5 * (g.nodes[i] + 1.0);
      I += 0.5 * g.weights[i] * 4.0 * std::numbers::pi * r * r * std::pow(1.0 - r * r, 0.5 * b);
    }
    CHECK(std::abs(equilibrium_constant(b) * I - 0.5) < 1e-12);
  }
  CHECK_THROWS_AS(equilibrium_constant(0.0), std::invalid_argument);
}

TEST_CASE("forward map at zero multipliers gives the Beta moment") {
  for (double b : {4.0, 12.0, 50.0}) {
    const Eigen::Vector3d c = qe_forward(Eigen::Vector3d::Zero(), b);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(c(i) - 1.0 / (b + 5.0)) < 1e-10);
  }
}

TEST_CASE("forward map matches brute-force quadrature") {
  for (const Eigen::Vector3d& lam : {Eigen::Vector3d(10, -10, 0), Eigen::Vector3d(3, 1, -2), Eigen::Vector3d(40, 25, -5)}) {
    const Eigen::Vector3d c = qe_forward(lam, 12.0), ref = brute_moments(lam, 12.0);
    CHECK((c - ref).cwiseAbs().maxCoeff() < 1e-9 * ref.maxCoeff());
  }
}

TEST_CASE("forward map is permutation equivariant and stays inside the trace limit") {
  const Eigen::Vector3d lam(7.0, -3.0, 1.5);
  const Eigen::Vector3d c = qe_forward(lam, 12.0);
  const Eigen::Vector3d cp = qe_forward(Eigen::Vector3d(lam(2), lam(0), lam(1)), 12.0);
  CHECK(std::abs(cp(0) - c(2)) < 1e-13);
  CHECK(std::abs(cp(1) - c(0)) < 1e-13);
  CHECK(std::abs(cp(2) - c(1)) < 1e-13);
  CHECK(qe_forward(Eigen::Vector3d(300, 290, 280), 12.0).sum() < 1.0);
  CHECK_THROWS_AS(qe_forward(Eigen::Vector3d(kQeLambdaLimit + 1, 0, 0), 12.0), QeError);
}

TEST_CASE("covariance matches the finite-difference Jacobian") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-10.0, 40.0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector3d lam(U(rng), U(rng), U(rng));
    const QeMoments m = qe_moments(lam, 12.0);
    const double h = 1e-4;
    Eigen::Matrix3d J;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(j) = h;
      J.col(j) = (qe_forward(lam + e, 12.0) - qe_forward(lam - e, 12.0)) / (2.0 * h);
    }
    CHECK((J - m.cov).norm() <= 1e-6 * m.cov.norm());
  }
}

TEST_CASE("Newton inversion round-trips random admissible triples") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d c = random_admissible(rng);
    const NewtonResult r = qe_invert_newton(c, 12.0);
    CHECK((qe_forward(r.lambda, 12.0) - c).cwiseAbs().maxCoeff() < 1e-10);
  }
  const NewtonResult eq = qe_invert_newton(Eigen::Vector3d::Constant(1.0 / 17.0), 12.0);
  CHECK(eq.lambda.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("multipliers and iterations grow toward the trace limit") {
  double prev_norm = 0.0;
  int prev_it = 0;
  for (double t : {0.3, 0.7, 0.95}) {
    const NewtonResult r = qe_invert_newton(Eigen::Vector3d(0.6, 0.3, 0.1) * t, 12.0);
    CHECK(r.lambda.norm() > prev_norm);
    CHECK(r.iterations >= prev_it);
    prev_norm = r.lambda.norm();
    prev_it = r.iterations;
  }
  CHECK_THROWS_AS(qe_invert_newton(Eigen::Vector3d(0.5, 0.3, 0.2), 12.0), QeError);
  CHECK_THROWS_AS(qe_invert_newton(Eigen::Vector3d(0.5, 0.3, -0.1), 12.0), QeError);
}

TEST_CASE("density integrates to one with the returned normalization") {
  const Eigen::Vector3d lam(8.0, -4.0, 2.0);
  const QeMoments m = qe_moments(lam, 12.0);
  const Eigen::Matrix3d L = lam.asDiagonal();
  const QuadratureRule rr = gauss_legendre_rule(80), rt = gauss_legendre_rule(60);
  const int nph = 120;
  double I = 0.0;
  for (std::size_t i = 0; i < rr.size(); ++i) {
    const double r = 0.5 * (rr.nodes[i] + 1.0);
    for (std::size_t j = 0; j < rt.size(); ++j) {
      const double ct = rt.nodes[j], st = std::sqrt(1.0 - ct * ct);
      for (int k = 0; k < nph; ++k) {
        const double ph = 2.0 * std::numbers::pi * (k + 0.5) / nph;
        const Eigen::Vector3d q = r * Eigen::Vector3d(st * std::cos(ph), st * std::sin(ph), ct);
        I += 0.5 * rr.weights[i] * rt.weights[j] * (2.0 * std::numbers::pi / nph) * r * r * qe_density(q, L, 12.0, m.log_Z);
      }
    }
  }
  CHECK(std::abs(I - 1.0) < 1e-10);
}

TEST_CASE("Jacobi eigendecomposition agrees with a library solver") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::Matrix3d A;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = N(rng);
    A = symmetrize(A);
    const SymEig e = sym_eig3(A);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> ref(A);
    const Eigen::Vector3d rv = ref.eigenvalues().reverse();
    CHECK((e.values - rv).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((from_eigen(e.vectors, e.values) - A).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((e.vectors.transpose() * e.vectors - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(e.values(0) >= e.values(1));
    CHECK(e.values(1) >= e.values(2));
  }
  // repeated eigenvalues accept any basis of the eigenspace
  const SymEig d = sym_eig3(Eigen::Matrix3d::Identity() * 0.2);
  CHECK((d.values - Eigen::Vector3d::Constant(0.2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("admissibility predicates") {
  CHECK(sorted_admissible(Eigen::Vector3d(0.3, 0.2, 0.1)));
  CHECK_FALSE(sorted_admissible(Eigen::Vector3d(0.2, 0.3, 0.1)));
  CHECK_FALSE(sorted_admissible(Eigen::Vector3d(0.5, 0.3, 0.2)));
  CHECK_FALSE(sorted_admissible(Eigen::Vector3d(0.5, 0.3, 0.0)));
  Eigen::Matrix3d C = Eigen::Matrix3d::Identity() * 0.1;
  CHECK(conformation_admissible(C));
  C(0, 1) = 0.2;
  C(1, 0) = 0.2;
  CHECK_FALSE(conformation_admissible(C));  // indefinite
}
