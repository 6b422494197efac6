#include "doctest.h"

#include "fene/pla_table.hpp"
#include "fene/qe_map.hpp"
#include "fene/tensor3.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

using namespace fene;

namespace {

const PlaTable& small_table() {
  static const PlaTable t = [] {
    PlaGridSpec s;
    s.nt = 6;
    s.nalpha = 5;
    s.nbeta = 4;
    return PlaTable::build(12.0, s, 1);
  }();
  return t;
}

const PlaTable& default_table() {
  static const PlaTable t = load_or_build_pla_table(std::string(FENE_CACHE_DIR) + "/pla_b12_default.json", 12.0, {});
  return t;
}

double rel(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("grid spec validation names the field") {
  PlaGridSpec s;
  s.nt = 1;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("PLA grid"), std::invalid_argument);
  s = {};
  s.t_max = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.share_floor = 0.4;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("grid coordinates invert and nodes are sorted admissible") {
  const PlaTable& t = small_table();
  for (double x : {0.0, 0.3, 1.0})
    for (double a : {0.0, 0.5, 1.0})
      for (double b : {0.0, 0.7, 1.0}) {
        const Eigen::Vector3d c = t.from_coords({x, a, b});
        CHECK(sorted_admissible(c));
        const PlaCoords back = t.to_coords(c);
        CHECK(std::abs(back.x - x) < 1e-10);
        CHECK(std::abs(back.alpha - a) < 1e-10);
        if (a > 0.0) CHECK(std::abs(back.beta - b) < 1e-10);  // beta is degenerate on the isotropic edge
      }
  CHECK(std::abs(t.from_coords({0.0, 0.5, 0.5}).sum() - t.spec().t_min) < 1e-12);
  CHECK(std::abs(t.from_coords({1.0, 0.5, 0.5}).sum() - t.spec().t_max) < 1e-12);
}

TEST_CASE("every node round-trips through the forward map") {
  const PlaTable& t = small_table();
  CHECK(t.build_residual() <= 1e-10);
  for (int i = 0; i < t.spec().nt; ++i)
    for (int j = 0; j < t.spec().nalpha; ++j)
      for (int k = 0; k < t.spec().nbeta; ++k)
        CHECK((qe_forward(t.node_lambda(i, j, k), 12.0) - t.node_c(i, j, k)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("lookup at a node returns the stored multipliers") {
  const PlaTable& t = small_table();
  for (int i = 0; i < t.spec().nt; ++i)
    for (int j = 1; j < t.spec().nalpha; ++j)
      for (int k = 0; k < t.spec().nbeta; ++k)
        CHECK(rel(t.lookup(t.node_c(i, j, k)), t.node_lambda(i, j, k)) < 1e-10);
}

TEST_CASE("lookup is within 1e-3 of the Newton oracle at the default resolution") {
  const PlaTable& t = default_table();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int q = 0; q < 1000; ++q) {
    const Eigen::Vector3d c = t.from_coords({U(rng), U(rng), U(rng)});
    worst = std::max(worst, rel(t.lookup(c), qe_invert_newton(c, 12.0).lambda));
  }
  MESSAGE("max relative lookup error " << worst);
  CHECK(worst <= 1e-3);
}

TEST_CASE("interpolant is continuous with derivative kinks across cell faces") {
  const PlaTable& t = default_table();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.1, 0.9);
  int kinked = 0, faces = 0, kinked_inside = 0;
  const int n[3] = {t.spec().nt, t.spec().nalpha, t.spec().nbeta};
  for (int axis = 0; axis < 3; ++axis) {
    const double h = 1.0 / (n[axis] - 1), d = h * 1e-5;
    for (int i = 3; i < n[axis] - 3; i += 4) {
      PlaCoords base{U(rng), U(rng), U(rng)};
      auto g = [&](double at) {
        PlaCoords p = base;
        (axis == 0 ? p.x : axis == 1 ? p.alpha : p.beta) = at;
        return t.lookup(t.from_coords(p)).norm();
      };
      // second differences: O(d) inside a cell, O(1) slope jump across a face
      auto jump = [&](double at) {
        const double across = std::abs(g(at + d) - 2.0 * g(at) + g(at - d));
        const double within = std::abs(g(at + 3.0 * d) - 2.0 * g(at + 2.0 * d) + g(at + d));
        return across > 10.0 * within;
      };
      CHECK(std::abs(g(i * h + 1e-12) - g(i * h - 1e-12)) < 1e-8 * std::max(1.0, g(i * h)));
      ++faces;
      if (jump(i * h)) ++kinked;
      if (jump((i + 0.5) * h)) ++kinked_inside;
    }
  }
  MESSAGE(kinked << " of " << faces << " faces show a derivative jump, " << kinked_inside << " cell midpoints do");
  CHECK(kinked * 2 > faces);
  CHECK(kinked_inside == 0);
}

TEST_CASE("out-of-range queries clamp with a counted warning; inadmissible ones throw") {
  PlaTable t = small_table();
  const long before = t.clamp_count();
  bool clamped = false;
  const Eigen::Vector3d inside = t.from_coords({0.5, 0.5, 0.5});
  t.lookup(inside, &clamped);
  CHECK_FALSE(clamped);
  t.lookup(Eigen::Vector3d(0.985, 0.005, 0.004), &clamped);  // trace above t_max
  CHECK(clamped);
  CHECK(t.clamp_count() == before + 1);
  CHECK_THROWS_AS(t.lookup(Eigen::Vector3d(0.1, 0.2, 0.05)), std::invalid_argument);
  CHECK_THROWS_AS(t.lookup(Eigen::Vector3d(0.6, 0.3, 0.2)), std::invalid_argument);
}

TEST_CASE("save and load round-trip exactly and check the schema") {
  const PlaTable& t = small_table();
  const std::string path = "test_pla_roundtrip.json";
  t.save(path);
  const PlaTable u = PlaTable::load(path);
  CHECK(u.b() == t.b());
  CHECK(u.spec() == t.spec());
  for (int i = 0; i < t.spec().nt; ++i)
    for (int j = 0; j < t.spec().nalpha; ++j)
      for (int k = 0; k < t.spec().nbeta; ++k) CHECK(u.node_lambda(i, j, k) == t.node_lambda(i, j, k));
  const Eigen::Vector3d c = t.from_coords({0.37, 0.61, 0.29});
  CHECK(u.lookup(c) == t.lookup(c));

  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find(PlaTable::kSchema) != std::string::npos);
  std::string bad = ss.str();
  bad.replace(bad.find(PlaTable::kSchema), std::string(PlaTable::kSchema).size(), "fene-pla-table/0");
  std::ofstream("test_pla_bad.json") << bad;
  CHECK_THROWS_AS(PlaTable::load("test_pla_bad.json"), std::runtime_error);
  std::remove(path.c_str());
  std::remove("test_pla_bad.json");
}

TEST_CASE("plain multiplier interpolation is available and coarser") {
  PlaGridSpec s;
  s.nt = 6;
  s.nalpha = 5;
  s.nbeta = 4;
  s.asymptotic_residual = false;
  const PlaTable plain = PlaTable::build(12.0, s, 1);
  const PlaTable& resid = small_table();
  const Eigen::Vector3d c = resid.from_coords({0.45, 0.5, 0.5});
  const Eigen::Vector3d ref = qe_invert_newton(c, 12.0).lambda;
  CHECK(rel(resid.lookup(c), ref) < rel(plain.lookup(c), ref));
}
