#include "doctest.h"

#include "fene/benchmark.hpp"
#include "fene/closures.hpp"
#include "fene/mlp.hpp"
#include "fene/qe_dataset.hpp"
#include "fene/qe_map.hpp"
#include "fene/tensor3.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdio>
#include <fstream>
#include <random>

using namespace fene;

namespace {

const PlaTable& table() {
  static const PlaTable t = [] {
    PlaGridSpec s;
    s.nt = 12;
    s.nalpha = 10;
    s.nbeta = 6;
    return PlaTable::build(12.0, s, 1);
  }();
  return t;
}

MlpWeights random_network(unsigned seed) {
  MlpWeights w = MlpWeights::zeros();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 0.3);
  for (auto& m : w.weights) m = m.unaryExpr([&](double) { return N(rng); });
  for (auto& b : w.biases) b = b.unaryExpr([&](double) { return N(rng); });
  w.input_mean = Eigen::Vector3d(0.2, 0.1, 0.05);
  w.input_std = Eigen::Vector3d(0.1, 0.05, 0.03);
  w.output_mean = Eigen::Vector3d(5.0, 1.0, -3.0);
  w.output_std = Eigen::Vector3d(8.0, 6.0, 5.0);
  return w;
}

ClosureResources resources() {
  static const MlpWeights nn = random_network(1);
  ClosureResources r;
  r.pla = &table();
  r.nn = &nn;
  return r;
}

Eigen::Matrix3d random_conformation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::Matrix3d A;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A(i, j) = U(rng) - 0.5;
  const Eigen::Matrix3d Q = Eigen::HouseholderQR<Eigen::Matrix3d>(A).householderQ();
  Eigen::Vector3d c(0.02 + 0.3 * U(rng), 0.02 + 0.2 * U(rng), 0.02 + 0.1 * U(rng));
  return from_eigen(Q, c);
}

}  // namespace

TEST_CASE("network with zero weights returns the output mean") {
  const MlpWeights w = [] {
    MlpWeights z = MlpWeights::zeros();
    z.output_mean = Eigen::Vector3d(1.5, -2.0, 0.25);
    return z;
  }();
  for (const Eigen::Vector3d& c : {Eigen::Vector3d(0.3, 0.2, 0.1), Eigen::Vector3d(0.9, 0.05, 0.01)})
    CHECK((nn_infer(w, c) - w.output_mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("network forward pass matches a hand-written evaluation") {
  const MlpWeights w = random_network(3);
  const Eigen::Vector3d c(0.31, 0.12, 0.04);
  Eigen::VectorXd x = (c - w.input_mean).cwiseQuotient(w.input_std);
  std::vector<double> a(x.data(), x.data() + 3);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> next(w.weights[k].rows());
    for (int r = 0; r < w.weights[k].rows(); ++r) {
      double s = w.biases[k](r);
      for (int q = 0; q < w.weights[k].cols(); ++q) s += w.weights[k](r, q) * a[q];
      next[r] = k < 2 ? std::tanh(s) : s;
    }
    a = next;
  }
  for (int i = 0; i < 3; ++i) CHECK(std::abs(nn_infer(w, c)(i) - (a[i] * w.output_std(i) + w.output_mean(i))) < 1e-12);
}

TEST_CASE("weight files round-trip with probes and reject malformed content") {
  MlpWeights w = random_network(4);
  w.b = 12.0;
  w.dataset_id = "unit";
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(0.01, 0.3);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d c(U(rng), U(rng), U(rng));
    w.probes.push_back({c, nn_infer(w, c)});
  }
  nn_save(w, "test_nn.json");
  const MlpWeights u = nn_load("test_nn.json");
  CHECK(u.probes.size() == 100);
  CHECK(u.b == 12.0);
  CHECK(u.dataset_id == "unit");
  CHECK(nn_probe_deviation(u) <= 1e-12);
  for (std::size_t k = 0; k < w.weights.size(); ++k) CHECK(u.weights[k] == w.weights[k]);

  auto rewrite = [](const std::string& from, const std::string& to) {
    std::ifstream in("test_nn.json");
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    s.replace(pos, from.size(), to);
    std::ofstream("test_nn_bad.json") << s;
  };
  rewrite("\"tanh\"", "\"relu\"");
  CHECK_THROWS_WITH_AS(nn_load("test_nn_bad.json"), doctest::Contains("activation"), MlpFormatError);
  rewrite("\"input_std\"", "\"input_sd\"");
  CHECK_THROWS_AS(nn_load("test_nn_bad.json"), MlpFormatError);
  std::ofstream("test_nn_bad.json") << "{ not json";
  CHECK_THROWS_AS(nn_load("test_nn_bad.json"), MlpFormatError);

  MlpWeights bad = random_network(5);
  bad.output_std(1) = 0.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("output_std"), MlpFormatError);
  bad = random_network(5);
  bad.weights[1] = Eigen::MatrixXd::Zero(64, 32);
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("weights[1]"), MlpFormatError);
  std::remove("test_nn.json");
  std::remove("test_nn_bad.json");
}

TEST_CASE("equilibria are fixed points of each closure") {
  const ClosureResources r = resources();
  const Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
  CHECK(closure_rhs(ClosureModel::FeneP, fene_p_equilibrium(12.0, false), K, 1.0, 12.0, r).norm() < 1e-14);
  CHECK((fene_p_equilibrium(12.0, false) - Eigen::Matrix3d::Identity() * (2.0 / 18.0)).norm() < 1e-16);
  ClosureResources rc = r;
  rc.fene_p_consistent = true;
  CHECK(closure_rhs(ClosureModel::FeneP, fene_p_equilibrium(12.0, true), K, 1.0, 12.0, rc).norm() < 1e-14);
  // the table's isotropic reference is exact to the Chebyshev fit
  const Eigen::Matrix3d Ceq = Eigen::Matrix3d::Identity() / 17.0;
  CHECK(closure_rhs(ClosureModel::QePla, Ceq, K, 1.0, 12.0, r).norm() < 1e-6);
  CHECK(polymer_stress(ClosureModel::QePla, Ceq, 12.0, r).tau.norm() < 1e-7);
}

TEST_CASE("closure right-hand sides are symmetric and permutation equivariant") {
  const ClosureResources r = resources();
  std::mt19937_64 rng(21);
  Eigen::Matrix3d P = Eigen::Matrix3d::Zero();
  P(0, 2) = P(1, 0) = P(2, 1) = 1.0;
  const Eigen::Matrix3d K = mixed_flow(2.0);
  for (ClosureModel m : {ClosureModel::FeneP, ClosureModel::QePla, ClosureModel::QeNn}) {
    for (int k = 0; k < 10; ++k) {
      const Eigen::Matrix3d C = random_conformation(rng);
      const Eigen::Matrix3d f = closure_rhs(m, C, K, 1.0, 12.0, r);
      CHECK((f - f.transpose()).norm() == 0.0);
      const Eigen::Matrix3d fp = closure_rhs(m, P * C * P.transpose(), P * K * P.transpose(), 1.0, 12.0, r);
      CHECK((fp - P * f * P.transpose()).norm() <= 1e-10 * std::max(1.0, f.norm()));
    }
  }
}

TEST_CASE("reconstructed multipliers are coaxial with the conformation") {
  const ClosureResources r = resources();
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Matrix3d C = random_conformation(rng);
    for (ClosureModel m : {ClosureModel::QePla, ClosureModel::QeNn}) {
      const Eigen::Matrix3d L = multiplier_tensor(m, C, r);
      CHECK((C * L - L * C).norm() <= 1e-10 * std::max(1.0, L.norm()));
    }
  }
  CHECK_THROWS_AS(multiplier_tensor(ClosureModel::QePla, Eigen::Matrix3d::Identity() * 0.4, r), ClosureError);
}

TEST_CASE("QE trace law under zero flow") {
  const ClosureResources r = resources();
  std::mt19937_64 rng(12);
  int checked = 0;
  for (int k = 0; k < 200 && checked < 20; ++k) {
    const Eigen::Matrix3d C = random_conformation(rng);
    const Eigen::Matrix3d L = multiplier_tensor(ClosureModel::QePla, C, r);
    const Eigen::Matrix3d f = closure_rhs(ClosureModel::QePla, C, Eigen::Matrix3d::Zero(), 2.0, 12.0, r);
    CHECK(std::abs(f.trace() + (4.0 / 2.0) * (C * L).trace()) < 1e-12);
    if (sym_eig3(L).values(2) > 0.0) {
      CHECK(f.trace() < 0.0);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("stress formulas") {
  const ClosureResources r = resources();
  const Eigen::Matrix3d C = Eigen::Vector3d(0.2, 0.1, 0.05).asDiagonal();
  const StressTensor s = polymer_stress(ClosureModel::FeneP, C, 12.0, r);
  CHECK(std::abs(s.tau(0, 0) - (12.0 * 0.2 / 0.65 - 1.0)) < 1e-14);
  CHECK(std::abs(s.N1() - 12.0 * 0.1 / 0.65) < 1e-13);
  const Eigen::Matrix3d L = multiplier_tensor(ClosureModel::QePla, C, r);
  const StressTensor q = polymer_stress(ClosureModel::QePla, C, 12.0, r);
  CHECK((q.tau - (C * L + L * C)).norm() < 1e-12);
  CHECK_THROWS_AS(polymer_stress(ClosureModel::FeneP, Eigen::Matrix3d::Identity() * 0.4, 12.0, r), ClosureError);
}

TEST_CASE("integration holds equilibria and stops at steady state") {
  const ClosureResources r = resources();
  ClosureIntegration opt;
  opt.T = 1.0;
  opt.steady_tol = 0.0;
  const ClosureTrajectory tr =
      integrate_closure(ClosureModel::FeneP, fene_p_equilibrium(12.0, false), Eigen::Matrix3d::Zero(), 1.0, 12.0, r, opt);
  CHECK(tr.steps == 1000);
  CHECK((tr.C - fene_p_equilibrium(12.0, false)).norm() < 1e-15);

  opt.T = 100.0;
  opt.steady_tol = 1e-10;
  const ClosureTrajectory ex =
      integrate_closure(ClosureModel::FeneP, fene_p_equilibrium(12.0, false), extensional_flow(1.0), 1.0, 12.0, r, opt);
  CHECK(ex.steady);
  CHECK(ex.C(0, 0) > ex.C(2, 2));
  CHECK(ex.C(2, 2) > ex.C(1, 1));
  CHECK(closure_rhs(ClosureModel::FeneP, ex.C, extensional_flow(1.0), 1.0, 12.0, r).norm() < 1e-9);
}

TEST_CASE("loss of admissibility is reported with the step") {
  const ClosureResources r = resources();
  ClosureIntegration opt;
  opt.dt = 0.5;  // far beyond the explicit stability limit
  opt.T = 50.0;
  try {
    integrate_closure(ClosureModel::FeneP, fene_p_equilibrium(12.0, false), extensional_flow(5.0), 1.0, 12.0, r, opt);
    FAIL("expected an admissibility failure");
  } catch (const ClosureError& e) {
    CHECK(e.step > 0);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("closure densities are normalized on the ball") {
  SolverConfig cfg;
  cfg.b = 12.0;
  cfg.s = 6.0;
  cfg.L = 6;
  cfg.N = 6;
  const Discretization layout(cfg);
  const TransformGrid ball = make_ball_grid(layout, 60, 40, 80);
  const ClosureResources r = resources();
  const Eigen::Matrix3d C = Eigen::Vector3d(0.12, 0.05, 0.04).asDiagonal();
  for (ClosureModel m : {ClosureModel::FeneP, ClosureModel::QePla}) {
    const auto f = closure_density(m, C, 12.0, r, ball);
    const Eigen::VectorXd v = ball.sample([&](double p, double th, double ph) {
      const double rr = std::sqrt(0.5 * (1.0 + p));
      return f(rr * Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)));
    });
    CHECK(std::abs(ball.integrate(v) - 1.0) < 1e-10);
  }
}

TEST_CASE("dataset records satisfy the invariants and round-trip") {
  QeSampling s;
  s.count = 300;
  s.seed = 17;
  const QeDataset d = gen_dataset(12.0, s, 1);
  CHECK(d.records.size() >= 270);  // at least 90% survive the trace filter
  for (const auto& rec : d.records) {
    CHECK(sorted_admissible(rec.c));
    CHECK(rec.c.sum() < 1.0 - s.trace_margin);
    CHECK(rec.lambda(0) >= rec.lambda(1));
    CHECK(rec.lambda(1) >= rec.lambda(2));
    CHECK(rec.lambda.minCoeff() >= s.lambda_min);
    CHECK(rec.lambda.maxCoeff() <= s.lambda_max);
  }
  write_dataset(d, "test_dataset.csv");
  const QeDataset back = read_dataset("test_dataset.csv");
  CHECK(back.records.size() == d.records.size());
  CHECK(back.b == 12.0);
  CHECK(back.sampling.seed == 17);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    CHECK(back.records[i].c == d.records[i].c);
    CHECK(back.records[i].lambda == d.records[i].lambda);
  }
  const QeDataset again = gen_dataset(12.0, s, 1);
  CHECK(again.records.front().lambda == d.records.front().lambda);
  std::remove("test_dataset.csv");
  std::remove("test_dataset.csv.json");

  const Eigen::Vector3d eq = qe_forward(Eigen::Vector3d::Zero(), 12.0);
  CHECK((eq - Eigen::Vector3d::Constant(1.0 / 17.0)).cwiseAbs().maxCoeff() < 1e-12);

  QeSampling bad;
  bad.lambda_min = 5.0;
  bad.lambda_max = 1.0;
  CHECK_THROWS_AS(gen_dataset(12.0, bad), std::invalid_argument);
}

TEST_CASE("QE stress approaches the reference stress in weak flow") {
  const ClosureResources r = resources();
  double prev = 0.0;
  for (double kappa : {1.0, 0.1}) {
    SolverConfig cfg;
    cfg.b = 12.0;
    cfg.s = 6.0;
    cfg.De = 1.0;
    cfg.L = 10;
    cfg.N = 10;
    cfg.dt = 1e-2;
    cfg.basis = BasisKind::JGinf;
    cfg.K = Eigen::Matrix3d::Zero();
    cfg.K(0, 1) = kappa;  // simple shear
    const Reference ref = compute_reference(cfg);
    CHECK(ref.steady.converged);
    const ClosureComparison qe = compare_closure(ClosureModel::QePla, ref, r);
    REQUIRE(qe.ok);
    const double err = (qe.stress.tau - ref.stress.tau).norm();
    MESSAGE("kappa " << kappa << " stress difference " << err << " of " << ref.stress.tau.norm());
    if (kappa < 1.0) CHECK(err < 0.1 * prev);
    prev = err;
  }
}

TEST_CASE("shipped network fixture reproduces its probes and inverts the QE map") {
  const MlpWeights w = nn_load(std::string(FENE_SOURCE_DIR) + "/tests/fixtures/nn_b12.json");
  CHECK(w.b == 12.0);
  CHECK(w.probes.size() == 100);
  CHECK(nn_probe_deviation(w) <= 1e-12);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-8.0, 50.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d lam(U(rng), U(rng), U(rng));
    std::sort(lam.data(), lam.data() + 3, std::greater<>());
    const Eigen::Vector3d c = qe_forward(lam, 12.0);
    worst = std::max(worst, (nn_infer(w, c) - lam).cwiseAbs().maxCoeff() / std::max(1.0, lam.norm()));
  }
  CHECK(worst < 5e-3);
}
