#pragma once

// Training pairs (sorted c, sorted lambda) produced by the forward map.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fene {

struct QeSampling {
  int count = 20000;
  double lambda_min = -10.0;
  double lambda_max = 60.0;
  /// Samples with tr C >= 1 - trace_margin are discarded.
  double trace_margin = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct QeRecord {
  Eigen::Vector3d c;
  Eigen::Vector3d lambda;
};

struct QeDataset {
  double b = 0.0;
  QeSampling sampling;
  std::vector<QeRecord> records;
  long discarded = 0;
};

/// Latin-hypercube samples of the box, sorted descending, mapped through qe_forward.
/// Throws std::runtime_error when filtering leaves nothing.
QeDataset gen_dataset(double b, const QeSampling& spec, int threads = 0);

/// Writes path (CSV c1,c2,c3,l1,l2,l3) and path + ".json" (metadata).
void write_dataset(const QeDataset& d, const std::string& path);
/// Reads both files back and checks the record invariants.
QeDataset read_dataset(const std::string& path);

}  // namespace fene
