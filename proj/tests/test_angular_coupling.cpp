#include "doctest.h"

#include "fene/angular_coupling.hpp"

#include <cmath>
#include <numbers>

using namespace fene;

namespace {

struct Oracle {
  Eigen::MatrixXd U[3][3], V[3][3], W[3][3];
};

// Direct tensor quadrature of (Y, g(Y') e_i r_j) on the sphere.
Oracle direct(const HarmonicSet& set) {
  const int L = set.L();
  const int nt = L + 12, np = 2 * L + 12;
  const QuadratureRule gl = gauss_legendre_rule(nt);
  const int n = static_cast<int>(set.size());
  Oracle o;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) o.U[i][j] = o.V[i][j] = o.W[i][j] = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd y(n), dth(n), dph(n);
  for (int a = 0; a < nt; ++a) {
    const double x = gl.nodes[a], st = std::sqrt(1 - x * x);
    const double th = std::acos(x);
    for (int b = 0; b < np; ++b) {
      const double ph = 2 * std::numbers::pi * b / np;
      const double w = gl.weights[a] * 2 * std::numbers::pi / np;
      for (int k = 0; k < n; ++k) {
        const auto& md = set.modes()[k];
        const auto [pv, pd] = assoc_legendre_norm_dtheta(md.l, md.m, th);
        y(k) = pv * azimuthal_basis(md.m, md.v, ph);
        dth(k) = pd * azimuthal_basis(md.m, md.v, ph);
        dph(k) = pv * azimuthal_basis_dphi(md.m, md.v, ph) / st;
      }
      const double r[3] = {st * std::cos(ph), st * std::sin(ph), x};
      const double t[3] = {x * std::cos(ph), x * std::sin(ph), -st};
      const double f[3] = {-std::sin(ph), std::cos(ph), 0.0};
      const Eigen::MatrixXd yy = y * y.transpose(), yt = y * dth.transpose(), yp = y * dph.transpose();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          o.U[i][j] += w * r[i] * r[j] * yy;
          o.V[i][j] += w * t[i] * r[j] * yt;
          o.W[i][j] += w * f[i] * r[j] * yp;
        }
    }
  }
  return o;
}

}  // namespace

TEST_CASE("azimuthal closed forms match trapezoidal quadrature") {
  const int np = 64;
  for (int m = 0; m <= 4; ++m)
    for (int v = 0; v <= (m ? 1 : 0); ++v)
      for (int mp = 0; mp <= 4; ++mp)
        for (int vp = 0; vp <= (mp ? 1 : 0); ++vp)
          for (int freq = 0; freq <= 2; ++freq)
            for (bool sine : {false, true})
              for (bool der : {false, true}) {
                double sum = 0.0;
                for (int k = 0; k < np; ++k) {
                  const double ph = 2 * std::numbers::pi * k / np;
                  const double wt = sine ? std::sin(freq * ph) : std::cos(freq * ph);
                  const double g = der ? azimuthal_basis_dphi(mp, vp, ph) : azimuthal_basis(mp, vp, ph);
                  sum += azimuthal_basis(m, v, ph) * g * wt * 2 * std::numbers::pi / np;
                }
                CHECK(std::abs(azimuthal_integral(m, v, mp, vp, freq, sine, der) - sum) < 1e-13);
              }
}

TEST_CASE("assembled U, V, W agree with direct sphere quadrature") {
  for (bool odd : {false, true}) {
    for (int L : {2, 5, 8}) {
      if (!odd && L % 2) continue;
      const HarmonicSet set(L, odd);
      const AngularSet A = assemble_UVW(set);
      const Oracle o = direct(set);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          INFO("L=" << L << " odd=" << odd << " i=" << i << " j=" << j);
          CHECK((A.U[i][j].dense() - o.U[i][j]).cwiseAbs().maxCoeff() < 1e-12);
          const Eigen::MatrixXd vw = A.V[i][j].dense() + A.W[i][j].dense();
          CHECK((vw - o.V[i][j] - o.W[i][j]).cwiseAbs().maxCoeff() < 1e-12);
          // separately, V and W are exact inside the stored |dl| <= 2 pattern
          double worst = 0.0;
          for (std::size_t a = 0; a < set.size(); ++a)
            for (std::size_t c = 0; c < set.size(); ++c) {
              if (std::abs(set.modes()[a].l - set.modes()[c].l) > 2) continue;
              worst = std::max(worst, std::abs(A.V[i][j].dense()(a, c) - o.V[i][j](a, c)));
              worst = std::max(worst, std::abs(A.W[i][j].dense()(a, c) - o.W[i][j](a, c)));
            }
          CHECK(worst < 1e-12);
        }
    }
  }
}

TEST_CASE("U is symmetric with trace equal to the identity") {
  const HarmonicSet set(12);
  const AngularSet A = assemble_UVW(set);
  Eigen::MatrixXd tr = Eigen::MatrixXd::Zero(set.size(), set.size());
  for (int i = 0; i < 3; ++i) {
    tr += A.U[i][i].dense();
    for (int j = 0; j < 3; ++j) CHECK((A.U[i][j].dense() - A.U[j][i].dense()).norm() < 1e-13);
  }
  CHECK((tr - Eigen::MatrixXd::Identity(set.size(), set.size())).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("coupling stays local in l and m") {
  const HarmonicSet set(20);
  const AngularSet A = assemble_UVW(set);
  std::size_t worst = 0;
  for (const auto* g : {&A.U, &A.V, &A.W})
    for (const auto& row : *g)
      for (const auto& b : row) {
        worst = std::max(worst, b.entries.size());
        for (const auto& e : b.entries) {
          const auto& a = set.modes()[e.trial];
          const auto& c = set.modes()[e.test];
          CHECK(std::abs(a.l - c.l) <= 2);
          CHECK(std::abs(a.m - c.m) <= 2);
        }
      }
  // at most 3 degrees x 5 orders x 2 parities per row
  CHECK(worst <= 30 * set.size());
}

TEST_CASE("harmonic set layout") {
  const HarmonicSet even(10);
  CHECK(even.size() == 66);
  CHECK(even.index_of(2, 0, 0) == 1);
  CHECK(even.index_of(2, 1, 1) == 3);
  CHECK(even.first_of_degree(4) == 6);
  CHECK_THROWS_AS(even.index_of(3, 0, 0), std::out_of_range);
  CHECK_THROWS_AS(even.index_of(2, 0, 1), std::out_of_range);
  const HarmonicSet all(3, true);
  CHECK(all.size() == 16);
}
