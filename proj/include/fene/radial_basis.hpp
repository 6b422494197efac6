#pragma once

// Radial Jacobi-Galerkin bases in the mapped coordinate p = 2 r^2 - 1 and the
// Gram-type matrices of the discrete Fokker-Planck system.

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace fene {

enum class BasisKind { JG1, JGinf };

std::string to_string(BasisKind kind);
BasisKind parse_basis_kind(const std::string& name);

/// Radial functions phi_{ln}(p) = (1+p)^k J_n^{s-2,beta}(p).
///   l = 0:         k = 0,   beta = 1/2           (both kinds)
///   JG1,   l > 0:  k = 1,   beta = 3/2           n = 0..N
///   JGinf, l > 0:  k = l/2, beta = l - 1/2       n = 0..N-l
/// JGinf matches the r^l pole behaviour of degree-l harmonics exactly.
class RadialBasis {
 public:
  struct Family {
    int pole_power;
    double alpha;
    double beta;
  };

  /// allow_odd admits odd degrees (JG1 only); used for parity diagnostics.
  RadialBasis(BasisKind kind, double s, int N, bool allow_odd = false);

  BasisKind kind() const { return kind_; }
  double s() const { return s_; }
  int N() const { return N_; }
  bool allow_odd() const { return allow_odd_; }

  int radial_dim(int l) const;
  Family family(int l) const;

  double eval(int l, int n, double p) const;
  std::pair<double, double> eval_with_derivative(int l, int n, double p) const;

  /// All n in range at one point; derivs optional.
  void eval_all(int l, double p, std::vector<double>& values, std::vector<double>* derivs = nullptr) const;

  /// Values (rows = points, cols = n) and p-derivatives at a set of points.
  void tabulate(int l, const std::vector<double>& points, Eigen::MatrixXd& values, Eigen::MatrixXd* derivs) const;

 private:
  void check_degree(int l) const;

  BasisKind kind_;
  double s_;
  int N_;
  bool allow_odd_;
};

/// Stand-alone evaluation without a truncation bound (n >= 0 only).
double radial_basis_eval(BasisKind kind, double s, int l, int n, double p);
std::pair<double, double> radial_basis_eval_with_derivative(BasisKind kind, double s, int l, int n, double p);

/// Square matrix in band storage. Entries outside the band are zero; the magnitude
/// of whatever was discarded when built from a dense matrix is kept for inspection.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(int n, int half_bandwidth);

  static BandedMatrix from_dense(const Eigen::MatrixXd& dense, int half_bandwidth);

  int size() const { return n_; }
  int half_bandwidth() const { return hb_; }
  int bandwidth() const { return 2 * hb_ + 1; }

  double operator()(int i, int j) const;
  double& at(int i, int j);

  Eigen::MatrixXd dense() const;
  /// max |discarded entry| / max |entry| of the source matrix (0 if built directly).
  double dropped_ratio() const { return dropped_ratio_; }

 private:
  int n_ = 0;
  int hb_ = 0;
  std::vector<double> band_;  // (2 hb + 1) x n, column-major by column j
  double dropped_ratio_ = 0.0;
};

enum class RadialMatrix { O, P, Q, R, S, Ocross };

/// Entries indexed (trial n, test n'):
///   O  = (phi_ln, phi_ln')                 P = ((1+p) phi_ln', phi_ln'')
///   Q  = (phi_ln / (1+p), phi_ln')         R = ((1+p)/(1-p) phi_ln, phi_ln'')
///   S  = ((1+p) phi_ln, phi_l'n'')         Ocross = (phi_ln, phi_l'n')
/// all in the (.,.)_{s,1/2} inner product. Each integrand is a polynomial times the
/// Gauss-Jacobi weight (s or s-1, 1/2), so the rule with npts points is exact once
/// npts >= N + max(l, l') + 3; extra_points enlarges the default N + max(l,l') + 6.
Eigen::MatrixXd radial_matrix_dense(const RadialBasis& basis, RadialMatrix which, int l, int lp,
                                    int extra_points = 0);

struct RadialBlockSet {
  BasisKind kind = BasisKind::JG1;
  double s = 0.0;
  int L = 0;
  int N = 0;
  /// Indexed directly by degree l (unused degrees left empty).
  std::vector<BandedMatrix> O, P, Q, R;
  /// S[l][l' - l + 2], Ocross[l][l' - l + 2] for |l - l'| <= 2, dense (trial x test).
  std::vector<std::array<Eigen::MatrixXd, 5>> S, Ocross;

  const Eigen::MatrixXd& s_block(int l, int lp) const { return S.at(l).at(lp - l + 2); }
  const Eigen::MatrixXd& ocross_block(int l, int lp) const { return Ocross.at(l).at(lp - l + 2); }
};

/// Half-bandwidths of O, P, Q, R.
inline constexpr std::array<int, 4> kRadialHalfBandwidths = {3, 2, 2, 2};

/// Builds all blocks for the degrees in `degrees` (each <= L). Throws if any diagonal
/// block has out-of-band content above 1e-10 of its max-norm (a basis/quadrature defect).
RadialBlockSet build_radial_blocks(const RadialBasis& basis, int L, const std::vector<int>& degrees);

/// Convenience: even degrees 0..L.
RadialBlockSet build_radial_blocks(BasisKind kind, double s, int L, int N);

}  // namespace fene
