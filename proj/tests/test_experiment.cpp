#include "doctest.h"

#include "fene/experiment.hpp"
#include "fene/mms.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fene;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> issues_of(const json& raw) {
  try {
    normalize_spec(raw);
  } catch (const SpecError& e) {
    return e.issues();
  }
  return {};
}

bool any_starts(const std::vector<std::string>& v, const std::string& prefix) {
  for (const auto& s : v)
    if (s.rfind(prefix, 0) == 0) return true;
  return false;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(FENE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json tiny_comparison() {
  return {{"kind", "compare_closures"}, {"N", 8}, {"kappa", {1.0}}, {"models", {"fene_p", "fene_p_consistent"}}};
}

}  // namespace

TEST_CASE("a minimal spec is filled with the documented defaults") {
  for (ExperimentKind k : all_experiment_kinds()) {
    const json n = normalize_spec({{"kind", to_string(k)}});
    CHECK(n == default_spec(k));
  }
  const json d = normalize_spec({{"kind", "mms_convergence"}});
  CHECK(d.at("resolutions") == json({10, 20, 30, 40}));
  CHECK(d.at("De").get<double>() == 24.0);
}

TEST_CASE("a compressible velocity gradient is rejected naming K") {
  const auto v = issues_of({{"kind", "benchmark_mixed"}, {"K", {{1, 0, 0}, {0, 1, 0}, {0, 0, 0}}}});
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("K:", 0) == 0);
  CHECK(v[0].find("traceless") != std::string::npos);
  CHECK(any_starts(issues_of({{"kind", "mms_convergence"}, {"K", {{1, 0, 0}, {0, 0, 0}, {0, 0, 0}}}}), "K:"));
}

TEST_CASE("a weight index above b/2 is rejected citing the range") {
  const auto v = issues_of({{"kind", "compare_closures"}, {"s", 7.0}});
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("s:", 0) == 0);
  CHECK(v[0].find("1 < s <= b/2") != std::string::npos);
  CHECK(any_starts(issues_of({{"kind", "mms_convergence"}, {"s", 1.0}}), "s:"));
}

TEST_CASE("the stability gate is enforced unless explicitly overridden") {
  const json raw = {{"kind", "benchmark_mixed"}, {"s", 5.0}, {"dt", 1.0}};
  CHECK(any_starts(issues_of(raw), "dt:"));
  json ok = raw;
  ok["allow_unstable_dt"] = true;
  CHECK(issues_of(ok).empty());
  // the bound scales with De, so one entry of a De list can violate it
  CHECK(any_starts(issues_of({{"kind", "fene_p_stress_table"}, {"s", 5.0}, {"dt", 0.5}, {"De", {10.0, 1.0}}}), "dt:"));
}

TEST_CASE("unknown keys, wrong types and bad entries are reported with their field") {
  auto v = issues_of({{"kind", "gen_dataset"}, {"cout", 10}, {"count", "many"}});
  CHECK(any_starts(v, "cout:"));
  CHECK(any_starts(v, "count:"));
  CHECK(any_starts(issues_of({{"kind", "compare_closures"}, {"models", {"fene_p", "qe_magic"}}}), "models[1]:"));
  CHECK(any_starts(issues_of({{"kind", "compare_closures"}, {"flow", "shear"}}), "flow:"));
  CHECK(any_starts(issues_of({{"kind", "mms_convergence"}, {"bases", {"JG2"}}}), "bases[0]:"));
  CHECK(any_starts(issues_of({{"kind", "gen_dataset"}, {"lambda_min", 70.0}}), "lambda_min:"));
  CHECK(any_starts(issues_of({{"kind", "build_pla_table"}, {"file", "../x.json"}}), "file:"));
  CHECK(any_starts(issues_of({{"kind", "nonsense"}}), "kind:"));
  CHECK(any_starts(issues_of(json::array()), "(root):"));
  // scalars stand for one-element lists, integral floats for integers
  const json n = normalize_spec({{"kind", "compare_closures"}, {"kappa", 3}, {"N", 24.0}});
  CHECK(n.at("kappa") == json({3.0}));
  CHECK(n.at("N").is_number_integer());
}

TEST_CASE("overrides parse JSON values and fall back to strings") {
  json s = {{"kind", "compare_closures"}};
  apply_override(s, "kappa=[1,2]");
  apply_override(s, "basis=JG1");
  apply_override(s, "allow_unstable_dt=true");
  CHECK(s.at("kappa") == json({1, 2}));
  CHECK(s.at("basis") == "JG1");
  CHECK(s.at("allow_unstable_dt") == true);
  CHECK_THROWS_AS(apply_override(s, "novalue"), SpecError);
}

TEST_CASE("spec hash identifies the normalized spec") {
  const json a = normalize_spec({{"kind", "gen_dataset"}});
  const json b = normalize_spec({{"kind", "gen_dataset"}, {"count", 20000}});
  const json c = normalize_spec({{"kind", "gen_dataset"}, {"seed", 2}});
  CHECK(spec_hash(a) == spec_hash(b));
  CHECK(spec_hash(a) != spec_hash(c));
  CHECK(spec_hash(a).size() == 16);
  CHECK(code_version().find("0.1.0") == 0);
}

TEST_CASE("identical specs give byte-identical tables with provenance headers") {
  const fs::path root = fs::temp_directory_path() / "fene_experiment_test";
  fs::remove_all(root);
  for (const json& raw : {json{{"kind", "gen_dataset"}, {"count", 200}, {"seed", 5}}, tiny_comparison()}) {
    const json spec = normalize_spec(raw);
    const ExperimentReport a = run_experiment(spec, (root / "a").string());
    const ExperimentReport b = run_experiment(spec, (root / "b").string());
    REQUIRE(a.files.size() == b.files.size());
    int compared = 0;
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      const std::string f = a.files[i];
      if (f.size() < 4 || f.substr(f.size() - 4) != ".csv" || f.find(".timing.") != std::string::npos) continue;
      CHECK(slurp(f) == slurp(b.files[i]));
      ++compared;
    }
    CHECK(compared >= 1);
    for (const auto& f : a.files) {
      if (f.find(".timing.csv") != std::string::npos) {
        const std::string t = slurp(f);
        CHECK(t.find("# spec_hash=" + spec_hash(spec)) != std::string::npos);
        CHECK(t.find("# wall_clock_utc=") != std::string::npos);
        CHECK(t.find("solve phase only") != std::string::npos);
      }
      if (f.size() > 5 && f.substr(f.size() - 5) == ".json" && f.find(spec.at("kind").get<std::string>() + ".json") != std::string::npos) {
        const json side = json::parse(slurp(f));
        CHECK(side.at("spec") == spec);
        CHECK(side.at("spec_hash") == spec_hash(spec));
      }
    }
  }
  const std::string table = slurp((root / "a" / "compare_closures.csv").string());
  CHECK(table.rfind("# experiment=compare_closures\n# spec_hash=", 0) == 0);
  CHECK(table.find("kappa,fene_p,fene_p_consistent\n1,") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("requesting the network without weights is a resource error") {
  json raw = tiny_comparison();
  raw["models"] = {"qe_nn"};
  raw["nn_weights"] = "/nonexistent/weights.json";
  CHECK_THROWS_AS(run_experiment(normalize_spec(raw), (fs::temp_directory_path() / "fene_nn_missing").string()),
                  ResourceError);
}

TEST_CASE("manufactured solution at M = N = 10") {
  const MmsResult r = run_mms(MmsCase{}, BasisKind::JG1, 10, 1e-3);
  CHECK(r.dof == 726);
  MESSAGE("error " << r.error << ", projection error " << r.projection_error);
  CHECK(r.error > 8.76e-3);
  CHECK(r.error < 8.76e-1);
  CHECK(r.max_mass_residual < 1e-12);
  CHECK(std::abs(r.error - r.projection_error) < 0.1 * r.projection_error);
}

TEST_CASE("the command line maps failures to exit codes") {
  const std::string out = (fs::temp_directory_path() / "fene_cli_test").string();
  CHECK(run_cli("validate --config /nonexistent.json") == 1);
  CHECK(run_cli("compare_closures --override s=7 --output-dir " + out) == 1);
  CHECK(run_cli("compare_closures --override 'K=[[1,0,0],[0,1,0],[0,0,0]]' --output-dir " + out) == 1);
  CHECK(run_cli("compare_closures --override N=8 --override 'models=[\"fene_p\"]' --override kappa=1 "
                "--override t_max=0.01 --output-dir " + out) == 2);
  CHECK(run_cli("gen_dataset --override count=20 --seed 3 --output-dir " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "qe_dataset.csv"));
  CHECK(json::parse(slurp((fs::path(out) / "gen_dataset.json").string())).at("spec").at("seed") == 3);
  CHECK(run_cli("no_such_command") == 1);
  fs::remove_all(out);
}
