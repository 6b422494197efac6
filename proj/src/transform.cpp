#include "fene/transform.hpp"

#include <cmath>
#include <numbers>

namespace fene {

namespace {

int order_of(int a) { return a == 0 ? 0 : (a + 1) / 2; }

}  // namespace

TransformGrid::TransformGrid(const Discretization& layout, int np, int ntheta, int nphi) : layout_(&layout) {
  const auto& cfg = layout.config();
  if (np <= 0) np = cfg.N + 40;
  if (ntheta <= 0) ntheta = cfg.L + 40;
  if (nphi <= 0) nphi = 2 * cfg.L + 80;
  const QuadratureRule rp = gauss_jacobi_rule(cfg.s, 0.5, np);
  p_ = rp.nodes;
  wp_ = rp.weights;
  build(ntheta, nphi);
}

TransformGrid::TransformGrid(const Discretization& layout, const QuadratureRule& radial_rule, int ntheta, int nphi)
    : layout_(&layout), p_(radial_rule.nodes), wp_(radial_rule.weights) {
  build(ntheta, nphi);
}

void TransformGrid::build(int ntheta, int nphi) {
  if (ntheta < 1 || nphi < 1) throw std::invalid_argument("TransformGrid needs positive point counts");
  const Discretization& d = *layout_;
  const int L = d.L();
  const QuadratureRule rx = gauss_legendre_rule(ntheta);
  x_ = rx.nodes;
  wx_ = rx.weights;
  nphi_ = nphi;

  radial_.resize(L + 1);
  for (int l : d.degrees()) d.basis().tabulate(l, p_, radial_[l], nullptr);

  legendre_.resize(ntheta, static_cast<Eigen::Index>(LegendreTable::index(L, L) + 1));
  for (int it = 0; it < ntheta; ++it) {
    const LegendreTable t(L, x_[it], std::sqrt((1.0 - x_[it]) * (1.0 + x_[it])));
    for (int l = 0; l <= L; ++l)
      for (int m = 0; m <= l; ++m) legendre_(it, static_cast<Eigen::Index>(LegendreTable::index(l, m))) = t.value(l, m);
  }
  azimuth_.resize(nphi, 2 * L + 1);
  for (int k = 0; k < nphi; ++k)
    for (int a = 0; a < 2 * L + 1; ++a) azimuth_(k, a) = azimuthal_basis(order_of(a), a == 0 ? 0 : (a + 1) % 2, phi(k));
}

double TransformGrid::phi(int k) const { return 2.0 * std::numbers::pi * k / nphi_; }
double TransformGrid::phi_weight() const { return 2.0 * std::numbers::pi / nphi_; }

Eigen::VectorXd TransformGrid::sample(const std::function<double(double, double, double)>& g) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(points()));
  for (int ip = 0; ip < np(); ++ip)
    for (int it = 0; it < ntheta(); ++it) {
      const double th = std::acos(x_[it]);
      for (int k = 0; k < nphi_; ++k) v(static_cast<Eigen::Index>(flat(ip, it, k))) = g(p_[ip], th, phi(k));
    }
  return v;
}

Eigen::VectorXd TransformGrid::analysis(const Eigen::VectorXd& values) const {
  if (static_cast<std::size_t>(values.size()) != points()) throw std::invalid_argument("grid sample size mismatch");
  const Discretization& d = *layout_;
  const int L = d.L(), nA = 2 * L + 1, nt = ntheta(), npp = np();
  const Eigen::Map<const Eigen::MatrixXd> V(values.data(), nphi_, static_cast<Eigen::Index>(npp) * nt);
  const Eigen::MatrixXd A = phi_weight() * (azimuth_.transpose() * V);  // nA x (np*nt)

  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size()));
  for (int l : d.degrees()) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(npp, 2 * l + 1);
    for (int ip = 0; ip < npp; ++ip)
      for (int it = 0; it < nt; ++it) {
        const Eigen::Index col = static_cast<Eigen::Index>(ip) * nt + it;
        for (int a = 0; a < 2 * l + 1; ++a) {
          const double pl = legendre_(it, static_cast<Eigen::Index>(LegendreTable::index(l, order_of(a))));
          B(ip, a) += wx_[it] * pl * A(a, col);
        }
      }
    (void)nA;
    const Eigen::Map<const Eigen::VectorXd> w(wp_.data(), npp);
    Eigen::Map<Eigen::MatrixXd>(out.data() + d.offset(l), d.radial_dim(l), 2 * l + 1) =
        radial_[l].transpose() * w.asDiagonal() * B;
  }
  return out;
}

Eigen::VectorXd TransformGrid::synthesis(const Eigen::VectorXd& coeffs) const {
  const Discretization& d = *layout_;
  if (static_cast<std::size_t>(coeffs.size()) != d.size()) throw std::invalid_argument("coefficient size mismatch");
  const int L = d.L(), nA = 2 * L + 1, nt = ntheta(), npp = np();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nA, static_cast<Eigen::Index>(npp) * nt);
  for (int l : d.degrees()) {
    const Eigen::Map<const Eigen::MatrixXd> C(coeffs.data() + d.offset(l), d.radial_dim(l), 2 * l + 1);
    const Eigen::MatrixXd B = radial_[l] * C;  // np x (2l+1)
    for (int ip = 0; ip < npp; ++ip)
      for (int it = 0; it < nt; ++it) {
        const Eigen::Index col = static_cast<Eigen::Index>(ip) * nt + it;
        for (int a = 0; a < 2 * l + 1; ++a)
          A(a, col) += legendre_(it, static_cast<Eigen::Index>(LegendreTable::index(l, order_of(a)))) * B(ip, a);
      }
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(points()));
  Eigen::Map<Eigen::MatrixXd>(out.data(), nphi_, static_cast<Eigen::Index>(npp) * nt) = azimuth_ * A;
  return out;
}

double TransformGrid::integrate(const Eigen::VectorXd& values) const {
  if (static_cast<std::size_t>(values.size()) != points()) throw std::invalid_argument("grid sample size mismatch");
  double sum = 0.0;
  for (int ip = 0; ip < np(); ++ip)
    for (int it = 0; it < ntheta(); ++it) {
      double row = 0.0;
      for (int k = 0; k < nphi_; ++k) row += values(static_cast<Eigen::Index>(flat(ip, it, k)));
      sum += wp_[ip] * wx_[it] * row;
    }
  return sum * phi_weight();
}

Eigen::VectorXd load_vector(const AssembledOperator& op, const std::function<double(double, double, double)>& h,
                            const TransformGrid* grid) {
  if (grid) return grid->analysis(grid->sample(h));
  const TransformGrid g(op.layout());
  return g.analysis(g.sample(h));
}

SpectralState project_function(const AssembledOperator& op, const std::function<double(double, double, double)>& h,
                               const TransformGrid* grid) {
  SpectralState st;
  st.coeffs = op.solve_mass(load_vector(op, h, grid));
  st.time = op.config().t0;
  return st;
}

}  // namespace fene
