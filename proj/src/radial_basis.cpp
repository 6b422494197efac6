#include "fene/radial_basis.hpp"

#include "fene/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace fene {

std::string to_string(BasisKind kind) { return kind == BasisKind::JG1 ? "JG1" : "JGinf"; }

BasisKind parse_basis_kind(const std::string& name) {
  if (name == "JG1" || name == "jg1") return BasisKind::JG1;
  if (name == "JGinf" || name == "jginf" || name == "JGInf") return BasisKind::JGinf;
  throw std::invalid_argument("unknown basis kind '" + name + "' (expected JG1 or JGinf)");
}

namespace {

RadialBasis::Family family_for(BasisKind kind, double s, int l) {
  if (l == 0) return {0, s - 2.0, 0.5};
  if (kind == BasisKind::JG1) return {1, s - 2.0, 1.5};
  return {l / 2, s - 2.0, l - 0.5};
}

void check_s(double s) {
  if (!(s > 1.0)) throw std::invalid_argument("weight index s must exceed 1");
}

}  // namespace

RadialBasis::RadialBasis(BasisKind kind, double s, int N, bool allow_odd)
    : kind_(kind), s_(s), N_(N), allow_odd_(allow_odd) {
  check_s(s);
  if (N < 0) throw std::invalid_argument("radial degree N must be non-negative");
  if (allow_odd && kind == BasisKind::JGinf) {
    throw std::invalid_argument("odd degrees are only supported with the JG1 basis");
  }
}

void RadialBasis::check_degree(int l) const {
  if (l < 0) throw std::invalid_argument("harmonic degree must be non-negative");
  if (l % 2 != 0 && !allow_odd_) {
    throw std::invalid_argument("odd harmonic degree " + std::to_string(l) + " violates head-tail symmetry");
  }
  if (kind_ == BasisKind::JGinf && l > N_) {
    throw std::invalid_argument("JGinf requires l <= N (l=" + std::to_string(l) + ", N=" + std::to_string(N_) + ")");
  }
}

int RadialBasis::radial_dim(int l) const {
  check_degree(l);
  return kind_ == BasisKind::JG1 ? N_ + 1 : N_ - l + 1;
}

RadialBasis::Family RadialBasis::family(int l) const {
  check_degree(l);
  return family_for(kind_, s_, l);
}

double RadialBasis::eval(int l, int n, double p) const { return eval_with_derivative(l, n, p).first; }

std::pair<double, double> RadialBasis::eval_with_derivative(int l, int n, double p) const {
  if (n < 0 || n >= radial_dim(l)) {
    throw std::out_of_range("radial index " + std::to_string(n) + " outside basis range for l=" + std::to_string(l));
  }
  return radial_basis_eval_with_derivative(kind_, s_, l, n, p);
}

void RadialBasis::eval_all(int l, double p, std::vector<double>& values, std::vector<double>* derivs) const {
  const int dim = radial_dim(l);
  const Family f = family_for(kind_, s_, l);
  std::vector<double> dj;
  jacobi_all(f.alpha, f.beta, dim - 1, p, values, derivs ? &dj : nullptr);
  const double one_plus = 1.0 + p;
  const double pk = f.pole_power == 0 ? 1.0 : std::pow(one_plus, f.pole_power);
  if (derivs) {
    const double dpk = f.pole_power == 0 ? 0.0 : f.pole_power * std::pow(one_plus, f.pole_power - 1);
    derivs->resize(dim);
    for (int n = 0; n < dim; ++n) (*derivs)[n] = dpk * values[n] + pk * dj[n];
  }
  for (int n = 0; n < dim; ++n) values[n] *= pk;
}

void RadialBasis::tabulate(int l, const std::vector<double>& points, Eigen::MatrixXd& values,
                           Eigen::MatrixXd* derivs) const {
  const int dim = radial_dim(l);
  values.resize(static_cast<Eigen::Index>(points.size()), dim);
  if (derivs) derivs->resize(static_cast<Eigen::Index>(points.size()), dim);
  std::vector<double> v, d;
  for (std::size_t i = 0; i < points.size(); ++i) {
    eval_all(l, points[i], v, derivs ? &d : nullptr);
    for (int n = 0; n < dim; ++n) {
      values(static_cast<Eigen::Index>(i), n) = v[n];
      if (derivs) (*derivs)(static_cast<Eigen::Index>(i), n) = d[n];
    }
  }
}

double radial_basis_eval(BasisKind kind, double s, int l, int n, double p) {
  return radial_basis_eval_with_derivative(kind, s, l, n, p).first;
}

std::pair<double, double> radial_basis_eval_with_derivative(BasisKind kind, double s, int l, int n, double p) {
  check_s(s);
  if (l < 0 || l % 2 != 0) throw std::invalid_argument("radial basis requires an even degree l >= 0");
  if (n < 0) throw std::out_of_range("radial index must be non-negative");
  const RadialBasis::Family f = family_for(kind, s, l);
  const auto [j, dj] = jacobi_eval_with_derivative(f.alpha, f.beta, n, p);
  if (f.pole_power == 0) return {j, dj};
  const double pk = std::pow(1.0 + p, f.pole_power);
  const double dpk = f.pole_power * std::pow(1.0 + p, f.pole_power - 1);
  return {pk * j, dpk * j + pk * dj};
}

BandedMatrix::BandedMatrix(int n, int half_bandwidth)
    : n_(n), hb_(half_bandwidth), band_(static_cast<std::size_t>(2 * half_bandwidth + 1) * n, 0.0) {}

BandedMatrix BandedMatrix::from_dense(const Eigen::MatrixXd& dense, int half_bandwidth) {
  if (dense.rows() != dense.cols()) throw std::invalid_argument("BandedMatrix needs a square matrix");
  BandedMatrix b(static_cast<int>(dense.rows()), half_bandwidth);
  double max_in = 0.0, max_out = 0.0;
  for (int j = 0; j < b.n_; ++j) {
    for (int i = 0; i < b.n_; ++i) {
      const double a = std::abs(dense(i, j));
      if (std::abs(i - j) <= half_bandwidth) {
        b.at(i, j) = dense(i, j);
        max_in = std::max(max_in, a);
      } else {
        max_out = std::max(max_out, a);
      }
    }
  }
  b.dropped_ratio_ = max_in > 0.0 ? max_out / max_in : max_out;
  return b;
}

double BandedMatrix::operator()(int i, int j) const {
  if (std::abs(i - j) > hb_) return 0.0;
  return band_[static_cast<std::size_t>(j) * (2 * hb_ + 1) + (i - j + hb_)];
}

double& BandedMatrix::at(int i, int j) {
  if (std::abs(i - j) > hb_) throw std::out_of_range("BandedMatrix::at outside band");
  return band_[static_cast<std::size_t>(j) * (2 * hb_ + 1) + (i - j + hb_)];
}

Eigen::MatrixXd BandedMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (int i = std::max(0, j - hb_); i <= std::min(n_ - 1, j + hb_); ++i) m(i, j) = (*this)(i, j);
  return m;
}

Eigen::MatrixXd radial_matrix_dense(const RadialBasis& basis, RadialMatrix which, int l, int lp, int extra_points) {
  const bool same = which == RadialMatrix::O || which == RadialMatrix::P || which == RadialMatrix::Q ||
                    which == RadialMatrix::R;
  if (same && l != lp) throw std::invalid_argument("O, P, Q, R are diagonal in the harmonic degree");
  if (which == RadialMatrix::Q && l == 0) {
    const int d = basis.radial_dim(0);
    return Eigen::MatrixXd::Zero(d, d);
  }

  const double s = basis.s();
  const double alpha = which == RadialMatrix::R ? s - 1.0 : s;
  const int npts = basis.N() + std::max(l, lp) + 6 + extra_points;
  const QuadratureRule rule = gauss_jacobi_rule(alpha, 0.5, npts);

  Eigen::MatrixXd v1, d1, v2, d2;
  basis.tabulate(l, rule.nodes, v1, &d1);
  basis.tabulate(lp, rule.nodes, v2, &d2);

  const Eigen::Map<const Eigen::VectorXd> p(rule.nodes.data(), npts);
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), npts);
  const Eigen::ArrayXd onep = (1.0 + p.array());

  switch (which) {
    case RadialMatrix::O:
    case RadialMatrix::Ocross:
      return v1.transpose() * w.asDiagonal() * v2;
    case RadialMatrix::P:
      w.array() *= onep;
      return d1.transpose() * w.asDiagonal() * d2;
    case RadialMatrix::Q:
      // phi_l carries (1+p)^k, k >= 1, for l > 0; nodes are interior so the quotient is exact.
      w.array() /= onep;
      return v1.transpose() * w.asDiagonal() * v2;
    case RadialMatrix::R:
      // weight already carries (1-p)^{s-1}; the integrand needs (1+p) * phi * phi'.
      w.array() *= onep;
      return v1.transpose() * w.asDiagonal() * d2;
    case RadialMatrix::S:
      w.array() *= onep;
      return v1.transpose() * w.asDiagonal() * d2;
  }
  throw std::logic_error("unhandled radial matrix kind");
}

RadialBlockSet build_radial_blocks(const RadialBasis& basis, int L, const std::vector<int>& degrees) {
  if (L < 0) throw std::invalid_argument("L must be non-negative");
  if (basis.kind() == BasisKind::JGinf && basis.N() < L) {
    throw std::invalid_argument("JGinf requires N >= L");
  }
  RadialBlockSet set;
  set.kind = basis.kind();
  set.s = basis.s();
  set.L = L;
  set.N = basis.N();
  set.O.resize(L + 1);
  set.P.resize(L + 1);
  set.Q.resize(L + 1);
  set.R.resize(L + 1);
  set.S.resize(L + 1);
  set.Ocross.resize(L + 1);

  std::vector<bool> present(L + 1, false);
  for (int l : degrees) {
    if (l < 0 || l > L) throw std::invalid_argument("degree outside 0..L");
    present[l] = true;
  }

  constexpr double kBandTolerance = 1e-10;
  const std::array<RadialMatrix, 4> diag = {RadialMatrix::O, RadialMatrix::P, RadialMatrix::Q, RadialMatrix::R};
  for (int l : degrees) {
    std::array<BandedMatrix*, 4> out = {&set.O[l], &set.P[l], &set.Q[l], &set.R[l]};
    for (int k = 0; k < 4; ++k) {
      *out[k] = BandedMatrix::from_dense(radial_matrix_dense(basis, diag[k], l, l), kRadialHalfBandwidths[k]);
      if (out[k]->dropped_ratio() > kBandTolerance) {
        throw std::runtime_error("radial matrix lost its band structure at l=" + std::to_string(l));
      }
    }
    for (int lp = l - 2; lp <= l + 2; ++lp) {
      if (lp < 0 || lp > L || !present[lp]) continue;
      set.S[l][lp - l + 2] = radial_matrix_dense(basis, RadialMatrix::S, l, lp);
      set.Ocross[l][lp - l + 2] = radial_matrix_dense(basis, RadialMatrix::Ocross, l, lp);
    }
  }
  return set;
}

RadialBlockSet build_radial_blocks(BasisKind kind, double s, int L, int N) {
  std::vector<int> degrees;
  for (int l = 0; l <= L; l += 2) degrees.push_back(l);
  return build_radial_blocks(RadialBasis(kind, s, N), L, degrees);
}

}  // namespace fene
