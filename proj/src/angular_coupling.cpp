#include "fene/angular_coupling.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fene {

HarmonicSet::HarmonicSet(int L, bool include_odd) : L_(L), include_odd_(include_odd) {
  if (L < 0) throw std::invalid_argument("HarmonicSet needs L >= 0");
  first_.assign(L + 1, -1);
  for (int l = 0; l <= L; l += include_odd ? 1 : 2) {
    degrees_.push_back(l);
    first_[l] = static_cast<int>(modes_.size());
    for (int m = 0; m <= l; ++m) {
      modes_.push_back({l, m, 0});
      if (m > 0) modes_.push_back({l, m, 1});
    }
  }
}

bool HarmonicSet::contains_degree(int l) const { return l >= 0 && l <= L_ && first_[l] >= 0; }

int HarmonicSet::index_of(int l, int m, int v) const {
  if (!contains_degree(l) || m < 0 || m > l || v < 0 || v > 1 || (m == 0 && v == 1)) {
    throw std::out_of_range("harmonic mode (" + std::to_string(l) + "," + std::to_string(m) + "," +
                            std::to_string(v) + ") not in set");
  }
  return first_[l] + local_index(m, v);
}

namespace {

using cplx = std::complex<double>;

// Trigonometric polynomial as a sparse list of c_k e^{i k phi}.
struct TrigPoly {
  std::array<std::pair<int, cplx>, 2> terms{};
  int count = 0;
  void add(int k, cplx c) { terms[count++] = {k, c}; }
};

// Unnormalized cos(m phi) (v=0) or sin(m phi) (v=1); m = 0 gives the constant 1.
TrigPoly trig(int m, int v) {
  TrigPoly t;
  if (m == 0) {
    if (v == 0) t.add(0, 1.0);
    return t;
  }
  if (v == 0) {
    t.add(m, 0.5);
    t.add(-m, 0.5);
  } else {
    t.add(m, cplx(0.0, -0.5));
    t.add(-m, cplx(0.0, 0.5));
  }
  return t;
}

double basis_norm(int m) { return m == 0 ? 1.0 / std::sqrt(2.0 * std::numbers::pi) : 1.0 / std::sqrt(std::numbers::pi); }

}  // namespace

double azimuthal_integral(int m, int v, int mp, int vp, int freq, bool sine_weight, bool derivative) {
  if (m < 0 || mp < 0 || freq < 0) throw std::invalid_argument("azimuthal_integral needs non-negative orders");
  if ((m == 0 && v == 1) || (mp == 0 && vp == 1)) return 0.0;
  const TrigPoly a = trig(m, v);
  TrigPoly b = trig(mp, vp);
  double scale = basis_norm(m) * basis_norm(mp);
  if (derivative) {
    // d/dphi cos(m phi) = -m sin(m phi); d/dphi sin(m phi) = m cos(m phi)
    if (mp == 0) return 0.0;
    b = trig(mp, 1 - vp);
    scale *= vp == 0 ? -mp : mp;
  }
  const TrigPoly w = trig(freq, sine_weight ? 1 : 0);
  cplx sum = 0.0;
  for (int i = 0; i < a.count; ++i)
    for (int j = 0; j < b.count; ++j)
      for (int k = 0; k < w.count; ++k)
        if (a.terms[i].first + b.terms[j].first + w.terms[k].first == 0)
          sum += a.terms[i].second * b.terms[j].second * w.terms[k].second;
  return 2.0 * std::numbers::pi * scale * sum.real();
}

AzimuthalMatrices build_E_matrices(int L) {
  if (L < 0) throw std::invalid_argument("build_E_matrices needs L >= 0");
  AzimuthalMatrices E;
  E.L = L;
  const int n = 2 * L + 1;
  std::array<Eigen::MatrixXd*, 10> mats = {&E.E00, &E.E01, &E.E11, &E.E02, &E.E12,
                                           &E.dE00, &E.dE01, &E.dE11, &E.dE02, &E.dE12};
  struct Spec {
    int freq;
    bool sine;
  };
  const std::array<Spec, 5> specs = {{{0, false}, {1, false}, {1, true}, {2, false}, {2, true}}};
  for (auto* m : mats) m->setZero(n, n);
  for (int m = 0; m <= L; ++m)
    for (int v = 0; v <= (m > 0 ? 1 : 0); ++v)
      for (int mp = std::max(0, m - 2); mp <= std::min(L, m + 2); ++mp)
        for (int vp = 0; vp <= (mp > 0 ? 1 : 0); ++vp)
          for (int k = 0; k < 5; ++k) {
            const int r = AzimuthalMatrices::index(m, v), c = AzimuthalMatrices::index(mp, vp);
            (*mats[k])(r, c) = azimuthal_integral(m, v, mp, vp, specs[k].freq, specs[k].sine, false);
            (*mats[k + 5])(r, c) = azimuthal_integral(m, v, mp, vp, specs[k].freq, specs[k].sine, true);
          }
  return E;
}

double polar_entry(PolarKind kind, int l, int m, int lp, int mp, int npts) {
  if (m < 0 || m > l || mp < 0 || mp > lp) throw std::invalid_argument("polar_entry needs 0 <= m <= l");
  if (kind == PolarKind::F01 && m == 0 && mp == 0) {
    throw std::invalid_argument("F01 is singular for m = m' = 0");
  }
  const QuadratureRule gl = gauss_legendre_rule(npts);
  const int lmax = std::max(l, lp);
  double sum = 0.0;
  for (std::size_t k = 0; k < gl.size(); ++k) {
    const double x = gl.nodes[k];
    const double y = std::sqrt((1.0 - x) * (1.0 + x));
    const LegendreTable t(lmax, x, y);
    const double a = t.value(l, m);
    double f = 0.0;
    switch (kind) {
      case PolarKind::F00: f = a * t.value(lp, mp); break;
      case PolarKind::F01:
        f = mp > 0 ? a * x * t.over_sin(lp, mp) : t.over_sin(l, m) * x * t.value(lp, mp);
        break;
      case PolarKind::F02: f = a * t.value(lp, mp) * (2.0 * x * x - 1.0); break;
      case PolarKind::F12: f = a * t.value(lp, mp) * 2.0 * x * y; break;
      case PolarKind::dF00: f = a * t.dtheta(lp, mp); break;
      case PolarKind::dF02: f = a * t.dtheta(lp, mp) * (2.0 * x * x - 1.0); break;
      case PolarKind::dF12: f = a * t.dtheta(lp, mp) * 2.0 * x * y; break;
    }
    sum += gl.weights[k] * f;
  }
  return sum;
}

PolarMatrices::PolarMatrices(int L) : L_(L) {
  for (auto& d : data_) d.assign(static_cast<std::size_t>(L + 1) * (L + 1) * 25, 0.0);
}

std::size_t PolarMatrices::slot(int l, int m, int dl, int dm) const {
  return ((static_cast<std::size_t>(l) * (L_ + 1) + m) * 5 + (dl + 2)) * 5 + (dm + 2);
}

double PolarMatrices::operator()(PolarKind kind, int l, int m, int lp, int mp) const {
  const int dl = lp - l, dm = mp - m;
  if (std::abs(dl) > 2 || std::abs(dm) > 2) return 0.0;
  if (l < 0 || l > L_ || lp < 0 || lp > L_ || m > l || mp > lp || m < 0 || mp < 0) return 0.0;
  return data_[static_cast<int>(kind)][slot(l, m, dl, dm)];
}

void PolarMatrices::set(PolarKind kind, int l, int m, int lp, int mp, double value) {
  const int dl = lp - l, dm = mp - m;
  if (std::abs(dl) > 2 || std::abs(dm) > 2 || l < 0 || l > L_ || lp < 0 || lp > L_ || m < 0 || m > l || mp < 0 ||
      mp > lp) {
    throw std::out_of_range("PolarMatrices::set outside stored pattern");
  }
  data_[static_cast<int>(kind)][slot(l, m, dl, dm)] = value;
}

PolarMatrices build_F_matrices(int L) {
  if (L < 0) throw std::invalid_argument("build_F_matrices needs L >= 0");
  PolarMatrices F(L);
  const int npts = L + 6;
  const QuadratureRule gl = gauss_legendre_rule(npts);
  std::vector<LegendreTable> tables;
  tables.reserve(gl.size());
  for (double x : gl.nodes) tables.emplace_back(L, x, std::sqrt((1.0 - x) * (1.0 + x)));

  // Even Delta-m kinds pair with E00/E02/E12 (and their derivatives); odd with E01/E11.
  const std::array<PolarKind, 3> even_kinds = {PolarKind::F00, PolarKind::F02, PolarKind::dF12};
  const std::array<PolarKind, 4> odd_kinds = {PolarKind::F01, PolarKind::F12, PolarKind::dF00, PolarKind::dF02};

  auto integrand = [&](PolarKind kind, const LegendreTable& t, double x, int l, int m, int lp, int mp) {
    const double y = std::sqrt((1.0 - x) * (1.0 + x));
    const double a = t.value(l, m);
    switch (kind) {
      case PolarKind::F00: return a * t.value(lp, mp);
      case PolarKind::F01: return mp > 0 ? a * x * t.over_sin(lp, mp) : t.over_sin(l, m) * x * t.value(lp, mp);
      case PolarKind::F02: return a * t.value(lp, mp) * (2.0 * x * x - 1.0);
      case PolarKind::F12: return a * t.value(lp, mp) * 2.0 * x * y;
      case PolarKind::dF00: return a * t.dtheta(lp, mp);
      case PolarKind::dF02: return a * t.dtheta(lp, mp) * (2.0 * x * x - 1.0);
      case PolarKind::dF12: return a * t.dtheta(lp, mp) * 2.0 * x * y;
    }
    return 0.0;
  };

  for (int l = 0; l <= L; ++l)
    for (int m = 0; m <= l; ++m)
      for (int lp = std::max(0, l - 2); lp <= std::min(L, l + 2); ++lp)
        for (int mp = std::max(0, m - 2); mp <= std::min(lp, m + 2); ++mp) {
          const bool odd = ((mp - m) % 2) != 0;
          auto fill = [&](PolarKind kind) {
            double sum = 0.0;
            for (std::size_t k = 0; k < gl.size(); ++k)
              sum += gl.weights[k] * integrand(kind, tables[k], gl.nodes[k], l, m, lp, mp);
            F.set(kind, l, m, lp, mp, sum);
          };
          if (odd) {
            for (PolarKind k : odd_kinds) fill(k);
          } else {
            for (PolarKind k : even_kinds) fill(k);
          }
        }
  return F;
}

Eigen::MatrixXd AngularBlock::dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& e : entries) d(e.trial, e.test) += e.value;
  return d;
}

AngularSet assemble_UVW(const HarmonicSet& set, const AzimuthalMatrices& E, const PolarMatrices& F) {
  if (E.L < set.L() || F.L() < set.L()) throw std::invalid_argument("E/F matrices built for a smaller L");
  AngularSet out;
  for (auto* group : {&out.U, &out.V, &out.W})
    for (auto& row : *group)
      for (auto& b : row) b.dim = set.size();

  using PK = PolarKind;
  const auto& modes = set.modes();
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const auto [l, m, v] = modes[a];
    for (int lp = std::max(0, l - 2); lp <= std::min(set.L(), l + 2); ++lp) {
      if (!set.contains_degree(lp)) continue;
      for (int mp = std::max(0, m - 2); mp <= std::min(lp, m + 2); ++mp)
        for (int vp = 0; vp <= (mp > 0 ? 1 : 0); ++vp) {
          const int b = set.index_of(lp, mp, vp);
          auto f = [&](PK k) { return F(k, l, m, lp, mp); };
          auto e = [&](const Eigen::MatrixXd& mat) { return E.at(mat, m, v, mp, vp); };
          const double delta = (m == mp && v == vp) ? 1.0 : 0.0;

          std::array<std::array<double, 3>, 3> u{}, vv{}, w{};
          u[0][0] = 0.25 * (f(PK::F00) - f(PK::F02)) * (e(E.E00) + e(E.E02));
          u[1][1] = 0.25 * (f(PK::F00) - f(PK::F02)) * (e(E.E00) - e(E.E02));
          u[2][2] = 0.5 * (f(PK::F00) + f(PK::F02)) * delta;
          u[0][1] = u[1][0] = 0.25 * (f(PK::F00) - f(PK::F02)) * e(E.E12);
          u[0][2] = u[2][0] = 0.5 * f(PK::F12) * e(E.E01);
          u[1][2] = u[2][1] = 0.5 * f(PK::F12) * e(E.E11);

          vv[0][0] = 0.25 * f(PK::dF12) * (e(E.E00) + e(E.E02));
          vv[1][1] = 0.25 * f(PK::dF12) * (e(E.E00) - e(E.E02));
          vv[2][2] = -0.5 * f(PK::dF12) * delta;
          vv[0][1] = vv[1][0] = 0.25 * f(PK::dF12) * e(E.E12);
          vv[0][2] = 0.5 * (f(PK::dF00) + f(PK::dF02)) * e(E.E01);
          vv[1][2] = 0.5 * (f(PK::dF00) + f(PK::dF02)) * e(E.E11);
          vv[2][0] = -0.5 * (f(PK::dF00) - f(PK::dF02)) * e(E.E01);
          vv[2][1] = -0.5 * (f(PK::dF00) - f(PK::dF02)) * e(E.E11);

          w[0][0] = -0.5 * f(PK::F00) * e(E.dE12);
          w[1][1] = -w[0][0];
          w[0][1] = -0.5 * f(PK::F00) * (e(E.dE00) - e(E.dE02));
          w[1][0] = 0.5 * f(PK::F00) * (e(E.dE00) + e(E.dE02));
          w[0][2] = -f(PK::F01) * e(E.dE11);
          w[1][2] = f(PK::F01) * e(E.dE01);

          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
              if (u[i][j] != 0.0) out.U[i][j].entries.push_back({static_cast<int>(a), b, u[i][j]});
              if (vv[i][j] != 0.0) out.V[i][j].entries.push_back({static_cast<int>(a), b, vv[i][j]});
              if (w[i][j] != 0.0) out.W[i][j].entries.push_back({static_cast<int>(a), b, w[i][j]});
            }
        }
    }
  }
  return out;
}

AngularSet assemble_UVW(const HarmonicSet& set) {
  return assemble_UVW(set, build_E_matrices(set.L()), build_F_matrices(set.L()));
}

}  // namespace fene
