#pragma once

// Inference for the 3-64-64-3 tanh network mapping sorted moment triples to sorted
// multiplier triples, with Z-score normalization on both ends.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace fene {

class MlpFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MlpProbe {
  Eigen::Vector3d input;
  Eigen::Vector3d output;
};

struct MlpWeights {
  std::vector<int> arch{3, 64, 64, 3};
  std::string activation = "tanh";
  /// weights[k] maps layer k to layer k+1, shape (arch[k+1], arch[k]).
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::Vector3d input_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d input_std = Eigen::Vector3d::Ones();
  Eigen::Vector3d output_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d output_std = Eigen::Vector3d::Ones();
  double b = 0.0;
  std::string dataset_id;
  std::vector<MlpProbe> probes;

  /// Throws MlpFormatError naming the offending field.
  void validate() const;
  /// Zero weights and biases for the default architecture.
  static MlpWeights zeros();
};

MlpWeights nn_load(const std::string& path);
void nn_save(const MlpWeights& w, const std::string& path);

Eigen::Vector3d nn_infer(const MlpWeights& w, const Eigen::Vector3d& c_sorted);

/// Largest deviation of nn_infer from the stored probe outputs, relative to max(|output|, 1).
double nn_probe_deviation(const MlpWeights& w);

}  // namespace fene
