#include "fene/pla_table.hpp"

#include "fene/qe_map.hpp"
#include "fene/tensor3.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fene {

void PlaGridSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("PLA grid: " + m); };
  if (nt < 2 || nalpha < 2 || nbeta < 2) fail("every axis needs at least 2 nodes");
  if (!(t_min > 0.0) || !(t_max < 1.0) || !(t_min < t_max)) fail("need 0 < t_min < t_max < 1");
  if (!(share_floor > 0.0) || !(c_floor >= 0.0)) fail("floors must be positive");
  if (!(eps(t_min) < 1.0 / 3.0)) fail("share floor at t_min leaves no admissible shares");
  if (!(eta_scale > 0.0)) fail("eta_scale must be positive");
  if (!(alpha_shift >= 0.0)) fail("alpha_shift must be non-negative");
}

double PlaGridSpec::eps(double t) const { return std::max(share_floor, c_floor / t); }

namespace {

double eta_of(double t) { return 1.0 / (1.0 - t) - 1.0 / t; }

// root in (0,1) of eta t^2 + (2 - eta) t - 1 = 0
double t_of(double eta) {
  if (std::abs(eta) < 1e-12) return 0.5;
  return 2.0 / ((2.0 - eta) + std::sqrt(eta * eta + 4.0));
}

}  // namespace

double PlaTable::x_of_t(double t) const {
  const double a = std::asinh(eta_of(spec_.t_min) / spec_.eta_scale);
  const double b = std::asinh(eta_of(spec_.t_max) / spec_.eta_scale);
  return (std::asinh(eta_of(t) / spec_.eta_scale) - a) / (b - a);
}

double PlaTable::t_of_x(double x) const {
  const double a = std::asinh(eta_of(spec_.t_min) / spec_.eta_scale);
  const double b = std::asinh(eta_of(spec_.t_max) / spec_.eta_scale);
  return t_of(spec_.eta_scale * std::sinh(a + (b - a) * x));
}

double PlaTable::iso_node(int j) { return 0.5 * (1.0 - std::cos(std::numbers::pi * (j + 0.5) / kIsoNodes)); }

double PlaTable::iso_A(double t) const {
  const double tc = std::clamp(t, spec_.t_min, spec_.t_max);
  const double x = x_of_t(tc);
  // barycentric interpolation at Chebyshev points of the first kind
  double num = 0.0, den = 0.0;
  for (int j = 0; j < kIsoNodes; ++j) {
    const double d = x - iso_node(j);
    if (d == 0.0) return iso_[j] / (1.0 - tc);
    const double w = (j % 2 ? -1.0 : 1.0) * std::sin(std::numbers::pi * (j + 0.5) / kIsoNodes) / d;
    num += w * iso_[j];
    den += w;
  }
  return num / den / (1.0 - tc);
}

PlaCoords PlaTable::to_coords(const Eigen::Vector3d& c) const {
  const double t = c.sum();
  const double x = x_of_t(t);
  const double e = spec_.eps(std::clamp(t, spec_.t_min, spec_.t_max));
  const double w = c(2) / t, v = c(1) / t;
  const double d = spec_.alpha_shift;
  const double alpha = std::log((w + d) / (1.0 / 3.0 + d)) / std::log((e + d) / (1.0 / 3.0 + d));
  const double span = std::log((1.0 - w) / (2.0 * w));
  const double beta = span > 1e-14 ? 1.0 - std::log(v / w) / span : 0.0;
  return {x, alpha, beta};
}

Eigen::Vector3d PlaTable::from_coords(const PlaCoords& p) const {
  const double t = t_of_x(p.x);
  const double e = spec_.eps(t);
  const double d = spec_.alpha_shift;
  const double w = (1.0 / 3.0 + d) * std::pow((e + d) / (1.0 / 3.0 + d), p.alpha) - d;
  const double v = w * std::pow((1.0 - w) / (2.0 * w), 1.0 - p.beta);
  return t * Eigen::Vector3d(std::max(1.0 - v - w, v), v, w);
}

Eigen::Vector3d PlaTable::node_c(int i, int j, int k) const {
  return from_coords({static_cast<double>(i) / (spec_.nt - 1), static_cast<double>(j) / (spec_.nalpha - 1),
                      static_cast<double>(k) / (spec_.nbeta - 1)});
}

Eigen::Vector3d PlaTable::asymptote(const Eigen::Vector3d& c) const {
  return Eigen::Vector3d::Constant(iso_A(c.sum())) - (0.5 * c.cwiseInverse());
}

void PlaTable::prepare() {
  stored_ = lambda_;
  if (!spec_.asymptotic_residual) return;
  if (static_cast<int>(iso_.size()) != kIsoNodes) {
    iso_.resize(kIsoNodes);
    for (int j = 0; j < kIsoNodes; ++j) {
      const double t = t_of_x(iso_node(j));
      const double lam = qe_invert_newton(Eigen::Vector3d::Constant(t / 3.0), b_).lambda(0);
      iso_[j] = (lam + 1.5 / t) * (1.0 - t);
    }
  }
  for (int i = 0; i < spec_.nt; ++i)
    for (int j = 0; j < spec_.nalpha; ++j)
      for (int k = 0; k < spec_.nbeta; ++k) stored_[flat(i, j, k)] -= asymptote(node_c(i, j, k));
}

Eigen::Vector3d PlaTable::node_lambda(int i, int j, int k) const { return lambda_.at(flat(i, j, k)); }

PlaTable PlaTable::build(double b, const PlaGridSpec& spec, int threads,
                         const std::function<void(int, int)>& progress) {
  spec.validate();
  PlaTable tab;
  tab.b_ = b;
  tab.spec_ = spec;
  tab.lambda_.assign(static_cast<std::size_t>(spec.nt) * spec.nalpha * spec.nbeta, Eigen::Vector3d::Zero());
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, spec.nt);

  std::mutex mu;
  std::atomic<int> next{0}, done{0};
  double worst = 0.0;
  std::exception_ptr error;
  // each worker takes whole t-slabs and continues the Newton guesses along them
  auto worker = [&]() {
    try {
      for (int i = next++; i < spec.nt; i = next++) {
        double slab_worst = 0.0;
        Eigen::Vector3d row_start = Eigen::Vector3d::Zero();
        for (int j = 0; j < spec.nalpha; ++j) {
          Eigen::Vector3d guess = row_start;
          for (int k = 0; k < spec.nbeta; ++k) {
            if (j == 0 && k > 0) {
              tab.lambda_[tab.flat(i, j, k)] = tab.lambda_[tab.flat(i, j, 0)];
              continue;
            }
            const Eigen::Vector3d c = tab.node_c(i, j, k);
            NewtonOptions opt;
            opt.initial = guess;
            const NewtonResult r = qe_invert_newton(c, b, opt);
            tab.lambda_[tab.flat(i, j, k)] = r.lambda;
            slab_worst = std::max(slab_worst, (qe_forward(r.lambda, b) - c).cwiseAbs().maxCoeff());
            guess = r.lambda;
            if (k == 0) row_start = r.lambda;
          }
        }
        std::lock_guard<std::mutex> lock(mu);
        worst = std::max(worst, slab_worst);
        ++done;
        if (progress) progress(done.load(), spec.nt);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
      next = spec.nt;
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  tab.build_residual_ = worst;
  tab.prepare();
  if (worst > 1e-10) {
    std::ostringstream os;
    os << "PLA table nodes fail the round-trip tolerance: " << worst;
    throw QeError(os.str());
  }
  return tab;
}

Eigen::Vector3d PlaTable::lookup(const Eigen::Vector3d& c, bool* clamped) const {
  if (!sorted_admissible(c)) {
    std::ostringstream os;
    os << "PLA lookup needs a sorted admissible triple, got " << c.transpose();
    throw std::invalid_argument(os.str());
  }
  PlaCoords x = to_coords(c);
  bool clip = false;
  auto clampv = [&](double v, double lo, double hi) {
    if (v < lo - 1e-12 || v > hi + 1e-12) clip = true;
    return std::clamp(v, lo, hi);
  };
  x.x = clampv(x.x, 0.0, 1.0);
  x.alpha = clampv(x.alpha, 0.0, 1.0);
  x.beta = clampv(x.beta, 0.0, 1.0);
  if (clip) {
    if (clamps_.fetch_add(1) == 0)
      std::cerr << "warning: PLA lookup outside the table range, clamping (c = " << c.transpose() << ")\n";
  }
  if (clamped) *clamped = clip;

  auto locate = [](double v, double lo, double hi, int n, int& i0, double& f) {
    const double s = (v - lo) / (hi - lo) * (n - 1);
    i0 = std::clamp(static_cast<int>(std::floor(s)), 0, n - 2);
    f = s - i0;
  };
  int i0, j0, k0;
  double ft, fa, fb;
  locate(x.x, 0.0, 1.0, spec_.nt, i0, ft);
  locate(x.alpha, 0.0, 1.0, spec_.nalpha, j0, fa);
  locate(x.beta, 0.0, 1.0, spec_.nbeta, k0, fb);
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        const double w = (di ? ft : 1 - ft) * (dj ? fa : 1 - fa) * (dk ? fb : 1 - fb);
        if (w != 0.0) out += w * stored_[flat(i0 + di, j0 + dj, k0 + dk)];
      }
  if (spec_.asymptotic_residual) out += asymptote(c);
  return out;
}

void PlaTable::save(const std::string& path) const {
  nlohmann::json j;
  j["schema"] = kSchema;
  j["b"] = b_;
  j["grid"] = {{"nt", spec_.nt},         {"nalpha", spec_.nalpha},           {"nbeta", spec_.nbeta},
               {"t_min", spec_.t_min},   {"t_max", spec_.t_max},             {"share_floor", spec_.share_floor},
               {"c_floor", spec_.c_floor}, {"eta_scale", spec_.eta_scale}, {"alpha_shift", spec_.alpha_shift},
               {"asymptotic_residual", spec_.asymptotic_residual}};
  j["build_residual"] = build_residual_;
  if (spec_.asymptotic_residual) j["isotropic_curve"] = iso_;
  std::vector<double> flatv;
  flatv.reserve(lambda_.size() * 3);
  for (const auto& l : lambda_) flatv.insert(flatv.end(), {l(0), l(1), l(2)});
  j["lambda"] = flatv;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump();
}

PlaTable PlaTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read PLA table " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed PLA table " + path + ": " + e.what());
  }
  if (j.value("schema", std::string()) != kSchema) throw std::runtime_error("unsupported PLA table schema in " + path);
  try {
    return from_json(j, path);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed PLA table " + path + ": " + e.what());
  }
}

PlaTable PlaTable::from_json(const nlohmann::json& j, const std::string& path) {
  PlaTable tab;
  tab.b_ = j.at("b").get<double>();
  const auto& g = j.at("grid");
  tab.spec_.nt = g.at("nt");
  tab.spec_.nalpha = g.at("nalpha");
  tab.spec_.nbeta = g.at("nbeta");
  tab.spec_.t_min = g.at("t_min");
  tab.spec_.t_max = g.at("t_max");
  tab.spec_.share_floor = g.at("share_floor");
  tab.spec_.c_floor = g.at("c_floor");
  tab.spec_.eta_scale = g.at("eta_scale");
  tab.spec_.alpha_shift = g.at("alpha_shift");
  tab.spec_.asymptotic_residual = g.at("asymptotic_residual");
  tab.spec_.validate();
  tab.build_residual_ = j.value("build_residual", 0.0);
  if (j.contains("isotropic_curve")) tab.iso_ = j.at("isotropic_curve").get<std::vector<double>>();
  const auto v = j.at("lambda").get<std::vector<double>>();
  const std::size_t n = static_cast<std::size_t>(tab.spec_.nt) * tab.spec_.nalpha * tab.spec_.nbeta;
  if (v.size() != 3 * n) throw std::runtime_error("PLA table " + path + " has the wrong number of nodes");
  tab.lambda_.resize(n);
  for (std::size_t i = 0; i < n; ++i) tab.lambda_[i] = Eigen::Vector3d(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
  tab.prepare();
  return tab;
}

PlaTable load_or_build_pla_table(const std::string& path, double b, const PlaGridSpec& spec) {
  if (!path.empty() && std::filesystem::exists(path)) {
    try {
      PlaTable t = PlaTable::load(path);
      if (t.b() == b && t.spec() == spec) return t;
    } catch (const std::exception&) {
      // stale or foreign file: rebuild below
    }
  }
  PlaTable t = PlaTable::build(b, spec);
  if (!path.empty()) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    t.save(path);
  }
  return t;
}

}  // namespace fene
