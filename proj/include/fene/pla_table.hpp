#pragma once

// Piecewise-linear lookup of the sorted multiplier triple from the sorted moment
// triple. Nodes are uniform in grid coordinates (x, alpha, beta) in [0,1]^3:
//   t = tr C with asinh(eta / eta0) uniform in x, eta = 1/(1-t) - 1/t,
//   shares (u, v, w) = c / t with log(w + d) uniform in alpha between 1/3 and eps(t),
//   v = w ((1-w) / (2w))^{1-beta}, u = 1 - v - w,
// so alpha = 0 is the isotropic edge and w >= eps(t) everywhere. The multipliers
// grow like 1/t and 1/(1-t) at the trace limits and like 1/c_i for small
// eigenvalues; these coordinates keep them close to linear. By default the
// interpolated quantity is the residual against the smooth reference
//   lambda_i ~ A(tr C) - 1 / (2 c_i),
// where A(t) = lambda_iso(t) + 3/(2t) makes it exact on the isotropic line
// (A ~ (b/2 + 1)/(1 - t) as t -> 1). A is a Chebyshev interpolant in the trace
// coordinate; the reference is added back at the query point.

#include <Eigen/Dense>

#include "json.hpp"

#include <atomic>
#include <functional>
#include <string>
#include <vector>

namespace fene {

struct PlaGridSpec {
  int nt = 40;
  int nalpha = 40;
  int nbeta = 40;
  double t_min = 0.02;
  double t_max = 0.98;
  /// Smallest share c3 / tr C kept on the grid.
  double share_floor = 0.005;
  /// Smallest absolute c3 kept on the grid; bounds the multipliers.
  double c_floor = 0.002;
  /// Scale eta0 of the trace axis stretching.
  double eta_scale = 1.0;
  /// Shift d of the share axis: alpha is uniform in log(w + d); 0 is logarithmic in w.
  double alpha_shift = 1.0;
  /// Interpolate lambda minus the smooth reference instead of lambda itself.
  bool asymptotic_residual = true;

  void validate() const;
  double eps(double t) const;
  bool operator==(const PlaGridSpec&) const = default;
};

struct PlaCoords {
  double x, alpha, beta;
};

class PlaTable {
 public:
  static constexpr const char* kSchema = "fene-pla-table/1";

  /// Fills every node by Newton inversion. threads <= 0 uses the hardware concurrency.
  static PlaTable build(double b, const PlaGridSpec& spec, int threads = 0,
                        const std::function<void(int done, int total)>& progress = {});

  double b() const { return b_; }
  const PlaGridSpec& spec() const { return spec_; }
  /// Largest |qe_forward(lambda_node) - c_node| seen while building.
  double build_residual() const { return build_residual_; }

  /// Sorted lambda for a sorted admissible c. Coordinates outside the grid are clamped
  /// (counted in clamp_count and reported once on stderr). Throws std::invalid_argument
  /// for inadmissible input.
  Eigen::Vector3d lookup(const Eigen::Vector3d& c_sorted, bool* clamped = nullptr) const;

  Eigen::Vector3d node_c(int i, int j, int k) const;
  Eigen::Vector3d node_lambda(int i, int j, int k) const;

  PlaCoords to_coords(const Eigen::Vector3d& c_sorted) const;
  /// A(tr C) - 1 / (2 c_i); A is clamped to the table's trace range.
  Eigen::Vector3d asymptote(const Eigen::Vector3d& c) const;
  static constexpr int kIsoNodes = 64;
  Eigen::Vector3d from_coords(const PlaCoords& x) const;

  long clamp_count() const { return clamps_.load(); }

  void save(const std::string& path) const;
  static PlaTable load(const std::string& path);

  PlaTable(const PlaTable& o)
      : b_(o.b_),
        spec_(o.spec_),
        lambda_(o.lambda_),
        stored_(o.stored_),
        iso_(o.iso_),
        build_residual_(o.build_residual_) {}
  PlaTable& operator=(const PlaTable& o) {
    b_ = o.b_;
    spec_ = o.spec_;
    lambda_ = o.lambda_;
    stored_ = o.stored_;
    iso_ = o.iso_;
    build_residual_ = o.build_residual_;
    return *this;
  }

 private:
  PlaTable() = default;
  static PlaTable from_json(const nlohmann::json& j, const std::string& path);
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * spec_.nalpha + j) * spec_.nbeta + k;
  }

  double b_ = 0.0;
  PlaGridSpec spec_;
  void prepare();
  double x_of_t(double t) const;
  double t_of_x(double x) const;
  /// Chebyshev nodes in the trace coordinate x for the isotropic curve.
  static double iso_node(int j);
  double iso_A(double t) const;

  std::vector<Eigen::Vector3d> lambda_;
  std::vector<Eigen::Vector3d> stored_;  // interpolated node values
  std::vector<double> iso_;              // (1 - t) A(t) at iso_node(j)
  double build_residual_ = 0.0;
  mutable std::atomic<long> clamps_{0};
};

/// Loads path when it exists and matches (b, spec), else builds and saves it.
PlaTable load_or_build_pla_table(const std::string& path, double b, const PlaGridSpec& spec);

}  // namespace fene
