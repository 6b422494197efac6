#pragma once

// Angular interaction matrices of the velocity-gradient term, assembled from
// separable azimuthal (E) and polar (F) integrals.

#include "fene/special_functions.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace fene {

/// Ordered real spherical-harmonic modes: l ascending, then m, then v.
/// Degree l contributes 2l+1 consecutive modes.
class HarmonicSet {
 public:
  /// Even degrees 0..L, or all degrees when include_odd.
  explicit HarmonicSet(int L, bool include_odd = false);

  int L() const { return L_; }
  bool include_odd() const { return include_odd_; }
  const std::vector<int>& degrees() const { return degrees_; }
  const std::vector<HarmonicIndex>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }

  bool contains_degree(int l) const;
  /// Position of (l, m, v); throws if absent.
  int index_of(int l, int m, int v) const;
  /// Position of the first mode of degree l.
  int first_of_degree(int l) const { return first_.at(l); }

  /// Offset of (m, v) inside its degree block.
  static int local_index(int m, int v) { return m == 0 ? 0 : 2 * m - 1 + v; }

 private:
  int L_;
  bool include_odd_;
  std::vector<int> degrees_;
  std::vector<HarmonicIndex> modes_;
  std::vector<int> first_;
};

/// Azimuthal sub-matrices over the index (v, m), m <= L, rows = trial (v, m),
/// cols = test (v', m'). The primed versions differentiate the test function.
struct AzimuthalMatrices {
  int L = 0;
  Eigen::MatrixXd E00, E01, E11, E02, E12;
  Eigen::MatrixXd dE00, dE01, dE11, dE02, dE12;

  static int index(int m, int v) { return HarmonicSet::local_index(m, v); }
  double at(const Eigen::MatrixXd& e, int m, int v, int mp, int vp) const { return e(index(m, v), index(mp, vp)); }
};

/// Closed form of (e_m^v, g(e_{m'}^{v'}) w) over [0, 2 pi), with w = cos(freq phi)
/// (sine_weight = false) or sin(freq phi), and g the identity or d/dphi.
double azimuthal_integral(int m, int v, int mp, int vp, int freq, bool sine_weight, bool derivative);

AzimuthalMatrices build_E_matrices(int L);

enum class PolarKind { F00, F01, F02, F12, dF00, dF02, dF12 };

/// (P̄_l^m, P̄_{l'}^{m'} g)_{sin theta}, with the theta-derivative on the primed factor for
/// the d-kinds. Gauss-Legendre in cos(theta) with npts points (exact when the integrand is
/// polynomial, which the Delta-m parity used by the assembly guarantees). F01 carries
/// cos/sin; its 1/sin is taken from the regular quotient P̄/sin, never a pole division.
double polar_entry(PolarKind kind, int l, int m, int lp, int mp, int npts);

/// F entries for |l - l'| <= 2 and |m - m'| <= 2 over all l, l' <= L. Entries whose
/// Delta-m parity never meets an E partner in the assembly are left at zero.
class PolarMatrices {
 public:
  PolarMatrices() = default;
  explicit PolarMatrices(int L);

  int L() const { return L_; }
  double operator()(PolarKind kind, int l, int m, int lp, int mp) const;
  void set(PolarKind kind, int l, int m, int lp, int mp, double value);

 private:
  std::size_t slot(int l, int m, int dl, int dm) const;

  int L_ = -1;
  std::array<std::vector<double>, 7> data_;
};

PolarMatrices build_F_matrices(int L);

/// Sparse block over a HarmonicSet: rows = trial modes (v,l,m), cols = test modes.
struct AngularBlock {
  struct Entry {
    int trial;
    int test;
    double value;
  };
  std::size_t dim = 0;
  std::vector<Entry> entries;

  Eigen::MatrixXd dense() const;
};

/// U[i][j] = (Y, Y' r_i r_j), V[i][j] = (Y, d_theta Y' theta_i r_j),
/// W[i][j] = (Y, d_phi Y' phi_i r_j / sin theta), zero-based i, j.
/// V and W are kept only for |l - l'| <= 2. Individually they have wider tails, but
/// the tails cancel in V + W (the surface gradient), which is the only combination
/// the solver uses.
struct AngularSet {
  std::array<std::array<AngularBlock, 3>, 3> U, V, W;
};

AngularSet assemble_UVW(const HarmonicSet& set, const AzimuthalMatrices& E, const PolarMatrices& F);
AngularSet assemble_UVW(const HarmonicSet& set);

}  // namespace fene
