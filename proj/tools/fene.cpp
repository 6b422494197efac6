// Experiment runner: one subcommand per experiment kind plus validate.

#include "CLI11.hpp"

#include "fene/closures.hpp"
#include "fene/experiment.hpp"
#include "fene/fp_solver.hpp"
#include "fene/mlp.hpp"
#include "fene/qe_map.hpp"

#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct Options {
  std::string config;
  std::string output_dir = "results";
  std::optional<long long> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON key-value spec file");
  cmd->add_option("--output-dir", o.output_dir, "Directory for tables, grids and sidecars");
  cmd->add_option("--seed", o.seed, "Random seed recorded in the spec");
  cmd->add_option("--override", o.overrides, "key=value applied after the config file")->take_all();
}

nlohmann::json assemble_spec(const std::string& kind, const Options& o) {
  nlohmann::json raw = o.config.empty() ? nlohmann::json::object() : fene::read_spec_file(o.config);
  if (!raw.is_object()) throw fene::SpecError({"--config: top level must be a JSON object"});
  if (kind != "validate") {
    if (raw.contains("kind") && raw.at("kind") != kind)
      throw fene::SpecError({"kind: config declares '" + raw.at("kind").dump() + "' but the subcommand is " + kind});
    raw["kind"] = kind;
  }
  for (const auto& kv : o.overrides) fene::apply_override(raw, kv);
  if (o.seed) raw["seed"] = *o.seed;
  return fene::normalize_spec(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FENE Fokker-Planck spectral solver and closure experiments"};
  app.require_subcommand(1);
  Options opts;
  for (auto kind : fene::all_experiment_kinds()) {
    const std::string name = fene::to_string(kind);
    add_common(app.add_subcommand(name, "Run the " + name + " experiment"), opts);
  }
  auto* val = app.add_subcommand("validate", "Check a spec and print it with defaults filled in");
  add_common(val, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  const std::string kind = app.get_subcommands().front()->get_name();

  try {
    const nlohmann::json spec = assemble_spec(kind, opts);
    if (kind == "validate") {
      std::cout << spec.dump(2) << "\n";
      std::cerr << "spec_hash " << fene::spec_hash(spec) << "\n";
      return kExitOk;
    }
    const fene::ExperimentReport rep = fene::run_experiment(spec, opts.output_dir);
    for (const auto& f : rep.files) std::cout << f << "\n";
    if (rep.failed_rows > 0) std::cerr << rep.failed_rows << " closure run(s) failed; see the status column\n";
    return kExitOk;
  } catch (const fene::SpecError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const fene::ResourceError& e) {
    std::cerr << "missing resource: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fene::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fene::NumericalFailure& e) {
    std::cerr << "numerical failure at step " << e.step() << ": " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fene::ClosureError& e) {
    std::cerr << "closure failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fene::QeError& e) {
    std::cerr << "quasi-equilibrium map failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
