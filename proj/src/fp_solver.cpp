#include "fene/fp_solver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

namespace fene {

void SolverConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); };
  if (!(b > 2.0) || !std::isfinite(b)) fail("b", "extensibility must be finite and exceed 2");
  if (!(s > 1.0) || s > b / 2.0 + 1e-14) {
    std::ostringstream os;
    os << "weight index must satisfy 1 < s <= b/2 = " << b / 2.0 << " (got " << s << ")";
    fail("s", os.str());
  }
  if (!(De > 0.0) || !std::isfinite(De)) fail("De", "Deborah number must be positive");
  if (!K.allFinite()) fail("K", "velocity gradient has non-finite entries");
  if (std::abs(K.trace()) > 1e-14) {
    std::ostringstream os;
    os << "velocity gradient must be traceless (incompressible), tr K = " << K.trace();
    fail("K", os.str());
  }
  if (L < 0) fail("L", "maximum degree must be non-negative");
  if (!include_odd && L % 2 != 0) fail("L", "maximum degree must be even");
  if (N < 0) fail("N", "radial degree must be non-negative");
  if (basis == BasisKind::JGinf && N < L) fail("N", "JGinf needs N >= L");
  if (include_odd && basis != BasisKind::JG1) fail("include_odd", "odd degrees need the JG1 basis");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt", "time step must be positive");
  if (!(T >= t0)) fail("T", "end time precedes start time");
  const double dtmax = stability_max_dt(*this);
  if (!allow_unstable_dt && !(dt < dtmax)) {
    std::ostringstream os;
    os << "time step " << dt << " violates the energy-stability bound dt < " << dtmax
       << " (set allow_unstable_dt to override)";
    fail("dt", os.str());
  }
}

double stability_gamma(double s) {
  if (!(s > 1.0)) throw std::invalid_argument("stability_gamma needs s > 1");
  return 0.75 * (1.0 + (s - 1.0) / 3.0 + 3.0 / (4.0 * (s - 1.0)));
}

double stability_max_dt(const SolverConfig& cfg) {
  const double gap = cfg.b - 2.0 * cfg.s;
  const double g = stability_gamma(cfg.s);
  if (gap <= 0.0) return std::numeric_limits<double>::infinity();
  return 3.0 * cfg.De / (2.0 * gap * g);
}

double mapped_measure_factor(double s) {
  // (1 - r^2)^s r^2 dr = 2^{-s} (1-p)^s * sqrt((1+p)/2) / 4 dp
  return std::pow(2.0, -s - 2.5);
}

namespace {
const SolverConfig& validated(const SolverConfig& cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

Discretization::Discretization(const SolverConfig& cfg)
    : cfg_(validated(cfg)), basis_(cfg.basis, cfg.s, cfg.N, cfg.include_odd), harmonics_(cfg.L, cfg.include_odd) {
  offset_.assign(cfg.L + 1, static_cast<std::size_t>(-1));
  for (int l : harmonics_.degrees()) {
    offset_[l] = size_;
    size_ += static_cast<std::size_t>(2 * l + 1) * basis_.radial_dim(l);
  }
}

std::size_t Discretization::index(int l, int m, int v, int n) const {
  if (!harmonics_.contains_degree(l) || m < 0 || m > l || n < 0 || n >= radial_dim(l)) {
    throw std::out_of_range("coefficient index outside layout");
  }
  return offset_[l] + static_cast<std::size_t>(HarmonicSet::local_index(m, v)) * radial_dim(l) + n;
}

std::size_t degrees_of_freedom(BasisKind kind, int L, int N) {
  const RadialBasis basis(kind, 2.0, N);
  std::size_t total = 0;
  for (int l = 0; l <= L; l += 2) total += static_cast<std::size_t>(2 * l + 1) * basis.radial_dim(l);
  return total;
}

namespace {

Eigen::Map<const Eigen::MatrixXd> block_of(const Discretization& d, const Eigen::VectorXd& x, int l) {
  return {x.data() + d.offset(l), d.radial_dim(l), 2 * l + 1};
}

Eigen::Map<Eigen::MatrixXd> block_of(const Discretization& d, Eigen::VectorXd& x, int l) {
  return {x.data() + d.offset(l), d.radial_dim(l), 2 * l + 1};
}

void check_layout(const Discretization& d, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != d.size()) {
    throw std::invalid_argument("coefficient vector length " + std::to_string(x.size()) + " does not match layout " +
                                std::to_string(d.size()));
  }
}

}  // namespace

AssembledOperator::AssembledOperator(const SolverConfig& cfg) : layout_(cfg) {
  radial_ = build_radial_blocks(layout_.basis(), cfg.L, layout_.degrees());

  const int nl = cfg.L + 1;
  lu_bdf2_.resize(nl);
  lu_euler_.resize(nl);
  lu_mass_.resize(nl);
  stiff_.resize(nl);
  mass_.resize(nl);
  const double pot = (cfg.b - 2.0 * cfg.s) / cfg.De;
  for (int l : layout_.degrees()) {
    const Eigen::MatrixXd O = radial_.O[l].dense();
    Eigen::MatrixXd B = 8.0 * radial_.P[l].dense();
    if (l > 0) B += 2.0 * l * (l + 1) * radial_.Q[l].dense();
    // rows are test functions: the trial/test matrix enters transposed
    stiff_[l] = (B / cfg.De + pot * 4.0 * radial_.R[l].dense()).transpose();
    const Eigen::MatrixXd Ot = O.transpose();
    mass_[l] = Ot;
    lu_bdf2_[l].compute(1.5 / cfg.dt * Ot + stiff_[l]);
    lu_euler_[l].compute(1.0 / cfg.dt * Ot + stiff_[l]);
    lu_mass_[l].compute(Ot);
    for (const auto* lu : {&lu_bdf2_[l], &lu_euler_[l], &lu_mass_[l]}) {
      const double rc = lu->rcond();
      if (!(rc > 1e-15)) {
        throw NumericalFailure("left-hand side block for l=" + std::to_string(l) + " is singular (rcond " +
                                   std::to_string(rc) + ")",
                               0);
      }
    }
  }

  if (cfg.K.cwiseAbs().maxCoeff() == 0.0) return;

  const HarmonicSet& hs = layout_.harmonics();
  const AngularSet ang = assemble_UVW(hs);
  using Triplets = std::vector<Eigen::Triplet<double>>;
  std::map<std::pair<int, int>, std::pair<Triplets, Triplets>> pairs;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double k = cfg.K(i, j);
      if (k == 0.0) continue;
      auto add = [&](const AngularBlock& blk, bool u) {
        for (const auto& e : blk.entries) {
          const auto& a = hs.modes()[e.trial];
          const auto& c = hs.modes()[e.test];
          auto& slot = pairs[{a.l, c.l}];
          (u ? slot.first : slot.second)
              .emplace_back(HarmonicSet::local_index(a.m, a.v), HarmonicSet::local_index(c.m, c.v), k * e.value);
        }
      };
      add(ang.U[i][j], true);
      add(ang.V[i][j], false);
      add(ang.W[i][j], false);
    }
  for (auto& [key, trip] : pairs) {
    const auto [l, lp] = key;
    Coupling c;
    c.l = l;
    c.lp = lp;
    c.S2t = 2.0 * radial_.s_block(l, lp).transpose();
    c.Oct = radial_.ocross_block(l, lp).transpose();
    c.GU.resize(2 * l + 1, 2 * lp + 1);
    c.GU.setFromTriplets(trip.first.begin(), trip.first.end());
    c.GVW.resize(2 * l + 1, 2 * lp + 1);
    c.GVW.setFromTriplets(trip.second.begin(), trip.second.end());
    c.GU.prune(0.0);
    c.GVW.prune(0.0);
    if (c.GU.nonZeros() + c.GVW.nonZeros() > 0) couplings_.push_back(std::move(c));
  }
}

Eigen::VectorXd AssembledOperator::apply_mass(const Eigen::VectorXd& x) const {
  check_layout(layout_, x);
  Eigen::VectorXd y(x.size());
  for (int l : layout_.degrees()) block_of(layout_, y, l).noalias() = mass_[l] * block_of(layout_, x, l);
  return y;
}

Eigen::VectorXd AssembledOperator::apply_stiffness(const Eigen::VectorXd& x) const {
  check_layout(layout_, x);
  Eigen::VectorXd y(x.size());
  for (int l : layout_.degrees()) block_of(layout_, y, l) = stiff_[l] * block_of(layout_, x, l);
  return y;
}

Eigen::VectorXd AssembledOperator::apply_convection(const Eigen::VectorXd& x) const {
  check_layout(layout_, x);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  Eigen::MatrixXd t;
  for (const auto& c : couplings_) {
    const auto B = block_of(layout_, x, c.l);
    auto Y = block_of(layout_, y, c.lp);
    if (c.GU.nonZeros() > 0) {
      t.noalias() = c.S2t * B;
      Y.noalias() += t * c.GU;
    }
    if (c.GVW.nonZeros() > 0) {
      t.noalias() = c.Oct * B;
      Y.noalias() += t * c.GVW;
    }
  }
  return y;
}

Eigen::VectorXd AssembledOperator::solve(const Eigen::VectorXd& rhs, bool bdf2) const {
  check_layout(layout_, rhs);
  Eigen::VectorXd x(rhs.size());
  const auto& lus = bdf2 ? lu_bdf2_ : lu_euler_;
  for (int l : layout_.degrees()) block_of(layout_, x, l) = lus[l].solve(Eigen::MatrixXd(block_of(layout_, rhs, l)));
  return x;
}

Eigen::VectorXd AssembledOperator::solve_mass(const Eigen::VectorXd& rhs) const {
  check_layout(layout_, rhs);
  Eigen::VectorXd x(rhs.size());
  for (int l : layout_.degrees()) block_of(layout_, x, l) = lu_mass_[l].solve(Eigen::MatrixXd(block_of(layout_, rhs, l)));
  return x;
}

Eigen::VectorXd mass_vector(const AssembledOperator& op) {
  const Discretization& d = op.layout();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d.size());
  const Eigen::MatrixXd O0 = op.radial().O[0].dense();
  const double scale = mapped_measure_factor(d.config().s) * std::sqrt(4.0 * std::numbers::pi);
  for (int n = 0; n < d.radial_dim(0); ++n) m(d.index(0, 0, 0, n)) = scale * O0(n, 0);
  return m;
}

double AssembledOperator::mass(const Eigen::VectorXd& x) const {
  check_layout(layout_, x);
  const Eigen::MatrixXd O0 = radial_.O[0].dense();
  double sum = 0.0;
  for (int n = 0; n < layout_.radial_dim(0); ++n) sum += O0(n, 0) * x(layout_.index(0, 0, 0, n));
  return mapped_measure_factor(layout_.config().s) * std::sqrt(4.0 * std::numbers::pi) * sum;
}

double AssembledOperator::norm_sq(const Eigen::VectorXd& x) const {
  return mapped_measure_factor(layout_.config().s) * x.dot(apply_mass(x));
}

namespace {

void check_finite(const Eigen::VectorXd& x, long step) {
  if (!x.allFinite()) throw NumericalFailure("non-finite coefficient at step " + std::to_string(step), step);
}

double source_amplitude(const Source* source, double t) { return source ? source->amplitude(t) : 0.0; }

}  // namespace

SpectralState bootstrap_first_step(const SpectralState& h0, const AssembledOperator& op, const Source* source) {
  const double dt = op.config().dt;
  const double t1 = h0.time + dt;
  Eigen::VectorXd rhs = op.apply_mass(h0.coeffs) / dt + op.apply_convection(h0.coeffs);
  if (source) rhs += source_amplitude(source, t1) * source->load;
  SpectralState out{op.solve(rhs, false), t1};
  check_finite(out.coeffs, 1);
  return out;
}

SpectralState bdf2_step(const SpectralState& hn, const SpectralState& hnm1, const AssembledOperator& op,
                        const Source* source) {
  const double dt = op.config().dt;
  const double t = hn.time + dt;
  Eigen::VectorXd rhs = op.apply_mass(4.0 * hn.coeffs - hnm1.coeffs) / (2.0 * dt) +
                        op.apply_convection(2.0 * hn.coeffs - hnm1.coeffs);
  if (source) rhs += source_amplitude(source, t) * source->load;
  SpectralState out{op.solve(rhs, true), t};
  check_finite(out.coeffs, -1);
  return out;
}

RunResult run_simulation(const AssembledOperator& op, const SpectralState& h0, const SpectralState* h1,
                         const Source* source, const RunOptions& options) {
  const SolverConfig& cfg = op.config();
  const auto start = std::chrono::steady_clock::now();
  const long nsteps = std::lround((cfg.T - h0.time) / cfg.dt);
  const Eigen::VectorXd mvec = mass_vector(op);
  const double source_mass = source ? mvec.dot(op.solve_mass(source->load)) : 0.0;
  const int every = std::max(1, options.record_every);

  RunResult res;
  SpectralState prev = h0;
  SpectralState cur = h1 ? *h1 : bootstrap_first_step(h0, op, source);
  if (nsteps <= 0) {
    res.final_state = h0;
    res.previous_state = h0;
    return res;
  }

  auto record = [&](long step, const SpectralState& now, const SpectralState& before, double mres) {
    StepDiagnostics d;
    d.step = step;
    d.t = now.time;
    d.mass = mvec.dot(now.coeffs);
    d.energy = op.norm_sq(now.coeffs) + op.norm_sq(2.0 * now.coeffs - before.coeffs);
    d.mass_residual = mres;
    if (options.conformation) d.conformation = options.conformation(now.coeffs);
    return d;
  };

  StepDiagnostics first = record(1, cur, prev, 0.0);
  const double e_ref = std::max(first.energy, std::numeric_limits<double>::min());
  res.history.push_back(first);

  double m_prev = mvec.dot(prev.coeffs), m_cur = first.mass;
  for (long step = 2; step <= nsteps; ++step) {
    SpectralState next;
    try {
      next = bdf2_step(cur, prev, op, source);
    } catch (const NumericalFailure&) {
      throw NumericalFailure("non-finite coefficient at step " + std::to_string(step), step);
    }
    const double m_next = mvec.dot(next.coeffs);
    const double amp = source_amplitude(source, next.time);
    const double mres = 3.0 * m_next - 4.0 * m_cur + m_prev - 2.0 * cfg.dt * amp * source_mass;
    const bool keep = step % every == 0 || step == nsteps;
    const double energy = op.norm_sq(next.coeffs) + op.norm_sq(2.0 * next.coeffs - cur.coeffs);
    if (!std::isfinite(energy) || energy > options.energy_growth_limit * e_ref) {
      std::ostringstream os;
      os << "discrete energy grew from " << e_ref << " to " << energy << " at step " << step;
      throw NumericalFailure(os.str(), step);
    }
    if (keep) {
      StepDiagnostics d = record(step, next, cur, mres);
      res.history.push_back(d);
    }
    prev = std::move(cur);
    cur = std::move(next);
    m_prev = m_cur;
    m_cur = m_next;
    if (options.wall_clock_budget > 0.0) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (el > options.wall_clock_budget) {
        throw NumericalFailure("wall-clock budget exceeded at step " + std::to_string(step), step);
      }
    }
  }
  res.steps = nsteps;
  res.final_state = std::move(cur);
  res.previous_state = std::move(prev);
  return res;
}

void write_diagnostics_csv(const std::string& path, const std::vector<StepDiagnostics>& history,
                           const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (!header_comment.empty()) out << header_comment;
  const bool with_c = !history.empty() && history.front().conformation.has_value();
  out << "step,t,mass,energy,mass_residual";
  if (with_c) out << ",C11,C12,C13,C22,C23,C33";
  out << "\n" << std::setprecision(17);
  for (const auto& d : history) {
    out << d.step << ',' << d.t << ',' << d.mass << ',' << d.energy << ',' << d.mass_residual;
    if (with_c && d.conformation) {
      const auto& C = *d.conformation;
      out << ',' << C(0, 0) << ',' << C(0, 1) << ',' << C(0, 2) << ',' << C(1, 1) << ',' << C(1, 2) << ',' << C(2, 2);
    }
    out << "\n";
  }
}

}  // namespace fene
