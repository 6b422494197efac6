#pragma once

// Declarative experiment specs: schema, defaults, validation and the runners
// that write CSV tables, field grids and JSON sidecars.

#include "json.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fene {

enum class ExperimentKind {
  MmsConvergence,
  BenchmarkExtensional,
  BenchmarkMixed,
  GenDataset,
  BuildPlaTable,
  CompareClosures,
  FenePStressTable,
};

std::string to_string(ExperimentKind kind);
/// Throws SpecError for unknown names.
ExperimentKind parse_experiment_kind(const std::string& name);
const std::vector<ExperimentKind>& all_experiment_kinds();

/// A spec that fails validation; each issue starts with the field path.
class SpecError : public std::invalid_argument {
 public:
  explicit SpecError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// A resource named by the spec (weights, table) is missing or unusable.
class ResourceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every key of the kind with its default value, plus "kind".
nlohmann::json default_spec(ExperimentKind kind);

/// Fills defaults, checks types, unknown keys and the physical invariants
/// (traceless K, 1 < s <= b/2, the time-step stability gate). Throws SpecError.
nlohmann::json normalize_spec(const nlohmann::json& raw);

/// Reads a JSON object from a file; throws SpecError if unreadable.
nlohmann::json read_spec_file(const std::string& path);

/// Applies "key=value"; the value is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& spec, const std::string& assignment);

/// FNV-1a 64 of the normalized spec's canonical dump, as 16 hex digits.
std::string spec_hash(const nlohmann::json& normalized);

/// Project version and the git revision seen at configure time.
std::string code_version();

struct ExperimentReport {
  std::vector<std::string> files;
  nlohmann::json summary;
  /// Rows whose closure integration failed; the run itself still succeeds.
  int failed_rows = 0;
};

/// Runs a normalized spec, writing into output_dir (created if needed).
/// Numerical failures of the spectral solver propagate as NumericalFailure.
ExperimentReport run_experiment(const nlohmann::json& normalized, const std::string& output_dir);

}  // namespace fene
