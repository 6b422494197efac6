#include "fene/qe_map.hpp"

#include "fene/special_functions.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace fene {

namespace {

// Kummer M(alpha, beta, a) * exp(-shift) by its positive series (Kummer's transform for a < 0).
double kummer_scaled(double alpha, double beta, double a, double shift) {
  double pre = -shift;
  if (a < 0.0) {
    pre += a;
    alpha = beta - alpha;
    a = -a;
  }
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 5000; ++n) {
    term *= (alpha + n) / (beta + n) * a / (n + 1.0);
    sum += term;
    if (term <= 1e-17 * sum && n > a) return sum * std::exp(pre);
  }
  throw QeError("Kummer series did not converge");
}

struct Directions {
  std::vector<double> x, y, z, w;  // octant directions, pole along x
};

const Directions& octant_directions(int np, int na) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, Directions> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({np, na});
  if (it != cache.end()) return it->second;
  const QuadratureRule gp = gauss_legendre_rule(np), ga = gauss_legendre_rule(na);
  Directions d;
  for (int i = 0; i < np; ++i) {
    const double c = 0.5 * (gp.nodes[i] + 1.0), s = std::sqrt(1.0 - c * c);
    for (int j = 0; j < na; ++j) {
      const double phi = 0.25 * std::numbers::pi * (ga.nodes[j] + 1.0);
      d.x.push_back(c);
      d.y.push_back(s * std::cos(phi));
      d.z.push_back(s * std::sin(phi));
      d.w.push_back(0.5 * gp.weights[i] * 0.25 * std::numbers::pi * ga.weights[j]);
    }
  }
  return cache.emplace(std::make_pair(np, na), std::move(d)).first->second;
}

// Piecewise Chebyshev interpolants of log R_k(a) on [-limit, limit], built once per b.
class RadialTable {
 public:
  static constexpr int kNodes = 20;
  static constexpr double kWidth = 4.0;

  explicit RadialTable(double b) {
    const double nu = 0.5 * b;
    const int panels = static_cast<int>(std::ceil(2.0 * kQeLambdaLimit / kWidth)) + 1;
    lo_ = -kQeLambdaLimit - 0.5 * kWidth;
    coef_.assign(static_cast<std::size_t>(panels) * 3 * kNodes, 0.0);
    std::vector<double> vals(kNodes);
    for (int k = 0; k < 3; ++k) {
      const double lb = std::log(0.5) + std::lgamma(k + 1.5) + std::lgamma(nu + 1.0) - std::lgamma(k + nu + 2.5);
      for (int p = 0; p < panels; ++p) {
        const double mid = lo_ + (p + 0.5) * kWidth;
        for (int j = 0; j < kNodes; ++j) {
          const double x = std::cos(std::numbers::pi * (j + 0.5) / kNodes);
          vals[j] = lb + log_kummer(k + 1.5, k + nu + 2.5, mid + 0.5 * kWidth * x);
        }
        double* c = &coef_[(static_cast<std::size_t>(p) * 3 + k) * kNodes];
        for (int i = 0; i < kNodes; ++i) {
          double sum = 0.0;
          for (int j = 0; j < kNodes; ++j) sum += vals[j] * std::cos(std::numbers::pi * i * (j + 0.5) / kNodes);
          c[i] = (i == 0 ? 1.0 : 2.0) * sum / kNodes;
        }
      }
    }
  }

  /// log R_k(a) for k = 0, 1, 2.
  void eval(double a, double out[3]) const {
    const int p = static_cast<int>((a - lo_) / kWidth);
    const double x = 2.0 * (a - (lo_ + (p + 0.5) * kWidth)) / kWidth;
    for (int k = 0; k < 3; ++k) {
      const double* c = &coef_[(static_cast<std::size_t>(p) * 3 + k) * kNodes];
      double b1 = 0.0, b2 = 0.0;
      for (int i = kNodes - 1; i >= 1; --i) {
        const double t = 2.0 * x * b1 - b2 + c[i];
        b2 = b1;
        b1 = t;
      }
      out[k] = x * b1 - b2 + c[0];
    }
  }

  static double log_kummer(double alpha, double beta, double a) {
    const double shift = std::max(a, 0.0);
    return std::log(kummer_scaled(alpha, beta, a, shift)) + shift;
  }

 private:
  double lo_ = 0.0;
  std::vector<double> coef_;
};

const RadialTable& radial_table(double b) {
  static std::mutex mu;
  static std::map<double, std::unique_ptr<RadialTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[b];
  if (!slot) slot = std::make_unique<RadialTable>(b);
  return *slot;
}

int auto_order(double spread) { return std::clamp(static_cast<int>(std::ceil(20.0 + 0.3 * spread)), 20, 400); }

}  // namespace

double equilibrium_constant(double b) {
  if (!(b > 0.0)) throw std::invalid_argument("equilibrium_constant needs b > 0");
  return std::exp(std::lgamma(0.5 * b + 2.5) - std::lgamma(0.5 * b + 1.0)) / (2.0 * std::pow(std::numbers::pi, 1.5));
}

QeMoments qe_moments(const Eigen::Vector3d& lambda, double b, const QeQuadrature& quad) {
  if (!lambda.allFinite() || lambda.cwiseAbs().maxCoeff() > kQeLambdaLimit) {
    std::ostringstream os;
    os << "multipliers outside the calibrated range |lambda| <= " << kQeLambdaLimit << ": " << lambda.transpose();
    throw QeError(os.str());
  }
  // pole on the axis of the largest multiplier
  int pole = 0;
  lambda.maxCoeff(&pole);
  const int ax1 = (pole + 1) % 3, ax2 = (pole + 2) % 3;
  const double spread = lambda.maxCoeff() - lambda.minCoeff();
  const int np = quad.n_polar > 0 ? quad.n_polar : auto_order(spread);
  const int na = quad.n_azimuth > 0 ? quad.n_azimuth : auto_order(std::abs(lambda(ax1) - lambda(ax2)) + 0.5 * spread);
  const Directions& d = octant_directions(np, na);

  const double nu = 0.5 * b;
  // R_k(a) = int_0^1 r^{2+2k} (1-r^2)^nu e^{a r^2} dr = B(k+3/2, nu+1)/2 M(k+3/2, k+nu+5/2, a)
  double beta_k[3];
  for (int k = 0; k < 3; ++k)
    beta_k[k] = 0.5 * std::exp(std::lgamma(k + 1.5) + std::lgamma(nu + 1.0) - std::lgamma(k + nu + 2.5));
  const double shift = std::max(0.0, lambda.maxCoeff());
  const RadialTable* table = quad.direct_radial ? nullptr : &radial_table(b);

  double Z = 0.0;
  Eigen::Vector3d m1 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d m2 = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < d.w.size(); ++k) {
    Eigen::Vector3d om2;
    om2(pole) = d.x[k] * d.x[k];
    om2(ax1) = d.y[k] * d.y[k];
    om2(ax2) = d.z[k] * d.z[k];
    const double a = lambda.dot(om2);
    double r0, r1, r2;
    if (table) {
      double lr[3];
      table->eval(a, lr);
      r0 = std::exp(lr[0] - shift);
      r1 = std::exp(lr[1] - shift);
      r2 = std::exp(lr[2] - shift);
    } else {
      r0 = beta_k[0] * kummer_scaled(1.5, nu + 2.5, a, shift);
      r1 = beta_k[1] * kummer_scaled(2.5, nu + 3.5, a, shift);
      r2 = beta_k[2] * kummer_scaled(3.5, nu + 4.5, a, shift);
    }
    Z += d.w[k] * r0;
    m1 += (d.w[k] * r1) * om2;
    m2 += (d.w[k] * r2) * (om2 * om2.transpose());
  }
  if (!(Z > 0.0) || !std::isfinite(Z)) throw QeError("quadrature produced a non-positive partition function");
  QeMoments out;
  out.c = m1 / Z;
  out.cov = m2 / Z - out.c * out.c.transpose();
  out.log_Z = std::log(8.0 * Z) + shift;
  return out;
}

NewtonResult qe_invert_newton(const Eigen::Vector3d& c, double b, const NewtonOptions& opt) {
  if (!c.allFinite() || c.minCoeff() <= 0.0) throw QeError("target moments must be positive");
  if (c.sum() >= 1.0) {
    std::ostringstream os;
    os << "target moments have trace " << c.sum() << " >= 1";
    throw QeError(os.str());
  }
  Eigen::Vector3d lam = opt.initial.value_or(Eigen::Vector3d::Zero());
  QeMoments m = qe_moments(lam, b);
  double phi = m.log_Z - lam.dot(c);
  NewtonResult res;
  for (int it = 0; it < opt.max_iter; ++it) {
    const Eigen::Vector3d g = m.c - c;
    res.residual = g.norm();
    res.iterations = it;
    if (res.residual < opt.tol) {
      res.lambda = lam;
      return res;
    }
    const Eigen::Vector3d step = -m.cov.ldlt().solve(g);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      Eigen::Vector3d trial = lam + t * step;
      if (trial.cwiseAbs().maxCoeff() > kQeLambdaLimit) continue;
      const QeMoments mt = qe_moments(trial, b);
      const double pt = mt.log_Z - trial.dot(c);
      // Armijo on the dual; accept pure residual decrease near roundoff
      if (pt <= phi + 1e-4 * t * g.dot(step) || (mt.c - c).norm() < 0.5 * res.residual) {
        lam = trial;
        m = mt;
        phi = pt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  res.lambda = lam;
  res.residual = (m.c - c).norm();
  if (res.residual < opt.tol) return res;
  std::ostringstream os;
  os << "Newton inversion did not converge for c = " << c.transpose() << " (residual " << res.residual << ")";
  throw QeError(os.str());
}

double qe_density(const Eigen::Vector3d& q, const Eigen::Matrix3d& lambda, double b, double log_Z) {
  const double r2 = q.squaredNorm();
  if (r2 >= 1.0) return 0.0;
  return std::exp(0.5 * b * std::log1p(-r2) + q.dot(lambda * q) - log_Z);
}

}  // namespace fene
