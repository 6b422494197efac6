#include "fene/experiment.hpp"

#include "fene/benchmark.hpp"
#include "fene/mlp.hpp"
#include "fene/mms.hpp"
#include "fene/pla_table.hpp"
#include "fene/qe_dataset.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#ifndef FENE_CODE_VERSION
#define FENE_CODE_VERSION "unknown"
#endif
#ifndef FENE_DEFAULT_NN_WEIGHTS
#define FENE_DEFAULT_NN_WEIGHTS ""
#endif

namespace fene {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kKindNames = {
    {ExperimentKind::MmsConvergence, "mms_convergence"},
    {ExperimentKind::BenchmarkExtensional, "benchmark_extensional"},
    {ExperimentKind::BenchmarkMixed, "benchmark_mixed"},
    {ExperimentKind::GenDataset, "gen_dataset"},
    {ExperimentKind::BuildPlaTable, "build_pla_table"},
    {ExperimentKind::CompareClosures, "compare_closures"},
    {ExperimentKind::FenePStressTable, "fene_p_stress_table"},
};

const std::vector<std::string> kModelNames = {"fene_p", "fene_p_consistent", "qe_pla", "qe_nn"};

json solver_defaults() {
  return {{"b", 12.0},
          {"s", 6.0},
          {"N", 32},
          {"L", 0},
          {"basis", "JGinf"},
          {"dt", 2e-3},
          {"steady_tol", 1e-10},
          {"t_max", 500.0},
          {"allow_unstable_dt", false},
          {"ball_np", 0},
          {"ball_ntheta", 0},
          {"ball_nphi", 0},
          {"closure_dt", 0.0},
          {"closure_T", 1000.0},
          {"closure_steady_tol", 1e-10},
          {"pla_table", ""},
          {"nn_weights", ""}};
}

json matrix_json(const Eigen::Matrix3d& K) {
  json m = json::array();
  for (int i = 0; i < 3; ++i) m.push_back({K(i, 0), K(i, 1), K(i, 2)});
  return m;
}

bool is_number(const json& v) { return v.is_number() && !v.is_boolean(); }

// Type of a value as judged against the default it replaces.
bool type_matches(const json& def, json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_integer()) {
    if (v.is_number_integer()) return true;
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
      v = static_cast<long long>(v.get<double>());
      return true;
    }
    return false;
  }
  if (def.is_number_float()) {
    if (!is_number(v)) return false;
    v = v.get<double>();
    return true;
  }
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array()) {
      if (def.empty() || !(is_number(def.front()) || def.front().is_string())) return false;
      v = json::array({v});  // a scalar stands for a one-element list
    }
    if (def.empty()) return true;
    for (auto& e : v) {
      json proto = def.front();
      if (!type_matches(proto, e)) return false;
    }
    return true;
  }
  return false;
}

Eigen::Matrix3d matrix_from_json(const json& m) {
  Eigen::Matrix3d K;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K(i, j) = m.at(i).at(j).get<double>();
  return K;
}

bool valid_matrix_json(const json& m) {
  if (!m.is_array() || m.size() != 3) return false;
  for (const auto& r : m) {
    if (!r.is_array() || r.size() != 3) return false;
    for (const auto& e : r)
      if (!is_number(e)) return false;
  }
  return true;
}

Eigen::Matrix3d flow_tensor(const std::string& flow, double kappa) {
  return flow == "extensional" ? extensional_flow(kappa) : mixed_flow(kappa);
}

std::string flow_of(ExperimentKind kind, const json& spec) {
  if (kind == ExperimentKind::BenchmarkExtensional) return "extensional";
  if (kind == ExperimentKind::BenchmarkMixed) return "mixed";
  return spec.at("flow").get<std::string>();
}

SolverConfig solver_config(const json& spec, double De, const Eigen::Matrix3d& K) {
  SolverConfig cfg;
  cfg.b = spec.at("b").get<double>();
  cfg.s = spec.at("s").get<double>();
  cfg.De = De;
  cfg.K = K;
  cfg.N = spec.at("N").get<int>();
  cfg.L = spec.at("L").get<int>() > 0 ? spec.at("L").get<int>() : cfg.N;
  cfg.dt = spec.at("dt").get<double>();
  cfg.basis = parse_basis_kind(spec.at("basis").get<std::string>());
  cfg.allow_unstable_dt = spec.at("allow_unstable_dt").get<bool>();
  return cfg;
}

// (De, K, kappa label) for every reference solve the spec asks for.
struct FlowCase {
  double De;
  Eigen::Matrix3d K;
  std::string kappa;  // empty for an explicit K
  double kappa_value;
};

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt_e(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

std::vector<FlowCase> flow_cases(ExperimentKind kind, const json& spec) {
  std::vector<FlowCase> cases;
  const std::string flow = flow_of(kind, spec);
  if (kind == ExperimentKind::FenePStressTable) {
    const double kappa = spec.at("kappa").get<double>();
    for (const auto& De : spec.at("De"))
      cases.push_back({De.get<double>(), flow_tensor(flow, kappa), fmt_g(kappa), kappa});
    return cases;
  }
  const double De = spec.at("De").get<double>();
  if (spec.contains("K") && !spec.at("K").is_null()) {
    cases.push_back({De, matrix_from_json(spec.at("K")), "", std::nan("")});
    return cases;
  }
  for (const auto& k : spec.at("kappa")) cases.push_back({De, flow_tensor(flow, k.get<double>()), fmt_g(k.get<double>()), k.get<double>()});
  return cases;
}

bool uses_solver(ExperimentKind k) {
  return k == ExperimentKind::BenchmarkExtensional || k == ExperimentKind::BenchmarkMixed ||
         k == ExperimentKind::CompareClosures || k == ExperimentKind::FenePStressTable;
}

void check_solver_spec(ExperimentKind kind, const json& spec, std::vector<std::string>& issues) {
  auto positive = [&](const char* key) {
    if (!(spec.at(key).get<double>() > 0.0)) issues.push_back(std::string(key) + ": must be positive");
  };
  positive("steady_tol");
  positive("t_max");
  positive("closure_T");
  if (spec.at("closure_dt").get<double>() < 0.0) issues.push_back("closure_dt: must be >= 0 (0 selects 1e-3 De)");
  if (spec.at("closure_steady_tol").get<double>() < 0.0) issues.push_back("closure_steady_tol: must be >= 0");
  for (const char* key : {"ball_np", "ball_ntheta", "ball_nphi", "L"})
    if (spec.at(key).get<int>() < 0) issues.push_back(std::string(key) + ": must be >= 0 (0 selects the default)");
  try {
    parse_basis_kind(spec.at("basis").get<std::string>());
  } catch (const std::exception&) {
    issues.push_back("basis: must be JG1 or JGinf");
    return;
  }

  const auto& models = spec.at("models");
  if (models.empty()) issues.push_back("models: at least one closure model is required");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string m = models[i].get<std::string>();
    if (std::find(kModelNames.begin(), kModelNames.end(), m) == kModelNames.end())
      issues.push_back("models[" + std::to_string(i) + "]: unknown model '" + m +
                       "' (fene_p, fene_p_consistent, qe_pla, qe_nn)");
    if (!seen.insert(m).second) issues.push_back("models[" + std::to_string(i) + "]: duplicate model '" + m + "'");
  }

  if (kind == ExperimentKind::CompareClosures || kind == ExperimentKind::FenePStressTable) {
    const std::string flow = spec.at("flow").get<std::string>();
    if (flow != "extensional" && flow != "mixed") issues.push_back("flow: must be 'extensional' or 'mixed'");
  }
  if (kind == ExperimentKind::FenePStressTable) {
    if (spec.at("De").empty()) issues.push_back("De: at least one Deborah number is required");
    if (!(spec.at("kappa").get<double>() >= 0.0)) issues.push_back("kappa: must be >= 0");
  } else {
    if (!spec.at("K").is_null() && !valid_matrix_json(spec.at("K"))) {
      issues.push_back("K: must be a 3x3 array of numbers or null");
      return;
    }
    if (spec.at("K").is_null() && spec.at("kappa").empty()) issues.push_back("kappa: at least one flow strength is required");
    for (std::size_t i = 0; i < spec.at("kappa").size(); ++i)
      if (!(spec.at("kappa")[i].get<double>() >= 0.0)) issues.push_back("kappa[" + std::to_string(i) + "]: must be >= 0");
    if (spec.contains("slice_points") && spec.at("slice_points").get<int>() < 3)
      issues.push_back("slice_points: need at least 3 samples");
    if (spec.contains("plane_resolution") && spec.at("plane_resolution").get<int>() < 0)
      issues.push_back("plane_resolution: must be >= 0 (0 disables)");
  }
  if (!issues.empty()) return;

  std::set<std::string> reported;
  for (const FlowCase& fc : flow_cases(kind, spec)) {
    try {
      solver_config(spec, fc.De, fc.K).validate();
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      if (kind == ExperimentKind::FenePStressTable && msg.rfind("De:", 0) != 0 && msg.rfind("dt:", 0) == 0)
        msg += " (at De = " + fmt_g(fc.De) + ")";
      if (msg.rfind("De:", 0) == 0 && kind == ExperimentKind::FenePStressTable) msg = "De: every entry must be positive";
      if (reported.insert(msg).second) issues.push_back(msg);
    }
  }
}

void check_mms_spec(const json& spec, std::vector<std::string>& issues) {
  if (!valid_matrix_json(spec.at("K"))) {
    issues.push_back("K: must be a 3x3 array of numbers");
    return;
  }
  if (spec.at("resolutions").empty()) issues.push_back("resolutions: at least one M = N value is required");
  if (spec.at("bases").empty()) issues.push_back("bases: at least one basis is required");
  for (std::size_t i = 0; i < spec.at("bases").size(); ++i) {
    try {
      parse_basis_kind(spec.at("bases")[i].get<std::string>());
    } catch (const std::exception&) {
      issues.push_back("bases[" + std::to_string(i) + "]: must be JG1 or JGinf");
    }
  }
  if (!(spec.at("dt_fine").get<double>() > 0.0)) issues.push_back("dt_fine: must be positive");
  if (!issues.empty()) return;
  std::set<std::string> reported;
  for (std::size_t i = 0; i < spec.at("resolutions").size(); ++i) {
    const int n = spec.at("resolutions")[i].get<int>();
    SolverConfig cfg;
    cfg.b = spec.at("b").get<double>();
    cfg.s = spec.at("s").get<double>();
    cfg.De = spec.at("De").get<double>();
    cfg.K = matrix_from_json(spec.at("K"));
    cfg.L = cfg.N = n;
    cfg.t0 = spec.at("t0").get<double>();
    cfg.T = spec.at("T").get<double>();
    cfg.dt = n >= spec.at("dt_fine_from").get<int>() ? spec.at("dt_fine").get<double>() : spec.at("dt").get<double>();
    cfg.allow_unstable_dt = spec.at("allow_unstable_dt").get<bool>();
    if (!(cfg.t0 > 0.0)) {
      issues.push_back("t0: the manufactured solution needs t0 > 0");
      return;
    }
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      if (msg.rfind("L:", 0) == 0 || msg.rfind("N:", 0) == 0)
        msg = "resolutions[" + std::to_string(i) + "]: " + msg.substr(msg.find(':') + 2);
      if (reported.insert(msg).second) issues.push_back(msg);
    }
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Shared output plumbing: every CSV starts with the same provenance lines.
class Writer {
 public:
  Writer(const json& spec, const std::string& dir)
      : spec_(spec), dir_(dir), kind_(spec.at("kind").get<std::string>()), hash_(spec_hash(spec)),
        started_(utc_now()), t0_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

  // Deterministic table: no timing or wall-clock content.
  void table(const std::string& name, const std::vector<std::string>& cols,
             const std::vector<std::vector<std::string>>& rows, const std::string& note = {}) {
    write(name, cols, rows, {note});
  }

  // Timing table: carries the wall-clock stamp and the timing scope.
  void timing(const std::string& name, const std::vector<std::string>& cols,
              const std::vector<std::vector<std::string>>& rows) {
    write(name, cols, rows,
          {"wall_clock_utc=" + started_, "wall_seconds=" + fmt_g(seconds_since(t0_)),
           "timing: solve phase only (assembly and table builds excluded)"});
  }

  void add_file(const std::string& name) { files_.push_back(path(name)); }

  ExperimentReport finish(json summary, int failed_rows = 0) {
    json side = {{"spec", spec_},
                 {"spec_hash", hash_},
                 {"code_version", code_version()},
                 {"wall_clock_utc", started_},
                 {"wall_seconds", seconds_since(t0_)},
                 {"files", files_},
                 {"summary", summary}};
    const std::string p = path(kind_ + ".json");
    std::ofstream(p) << side.dump(2) << "\n";
    files_.push_back(p);
    return {files_, summary, failed_rows};
  }

 private:
  void write(const std::string& name, const std::vector<std::string>& cols,
             const std::vector<std::vector<std::string>>& rows, const std::vector<std::string>& extra) {
    const std::string p = path(name);
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p);
    out << "# experiment=" << kind_ << "\n# spec_hash=" << hash_ << "\n# code_version=" << code_version() << "\n";
    for (const auto& e : extra)
      if (!e.empty()) out << "# " << e << "\n";
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << "\n";
    }
    files_.push_back(p);
  }

  json spec_;
  std::string dir_, kind_, hash_, started_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::string> files_;
};

ExperimentReport run_mms_convergence(const json& spec, const std::string& dir) {
  Writer w(spec, dir);
  MmsCase mc;
  mc.b = spec.at("b").get<double>();
  mc.s = spec.at("s").get<double>();
  mc.De = spec.at("De").get<double>();
  mc.K = matrix_from_json(spec.at("K"));
  mc.t0 = spec.at("t0").get<double>();
  mc.T = spec.at("T").get<double>();
  std::vector<BasisKind> bases;
  for (const auto& b : spec.at("bases")) bases.push_back(parse_basis_kind(b.get<std::string>()));

  std::vector<std::string> cols = {"N", "dt"};
  for (BasisKind k : bases) {
    cols.push_back("dof_" + to_string(k));
    cols.push_back("error_" + to_string(k));
  }
  std::vector<std::vector<std::string>> rows, trows;
  json details = json::array();
  for (const auto& nj : spec.at("resolutions")) {
    const int n = nj.get<int>();
    const double dt = n >= spec.at("dt_fine_from").get<int>() ? spec.at("dt_fine").get<double>() : spec.at("dt").get<double>();
    std::vector<std::string> row = {std::to_string(n), fmt_e(dt)};
    for (BasisKind k : bases) {
      const MmsResult r = run_mms(mc, k, n, dt);
      row.push_back(std::to_string(r.dof));
      row.push_back(fmt_e(r.error));
      trows.push_back({std::to_string(n), to_string(k), std::to_string(r.steps), fmt_e(r.assembly_seconds), fmt_e(r.seconds)});
      details.push_back({{"N", n},
                         {"basis", to_string(k)},
                         {"dof", r.dof},
                         {"dt", dt},
                         {"error", r.error},
                         {"projection_error", r.projection_error},
                         {"max_mass_residual", r.max_mass_residual}});
    }
    rows.push_back(row);
  }
  w.table("mms_convergence.csv", cols, rows, "relative weighted L2 error of h at T");
  w.timing("mms_convergence.timing.csv", {"N", "basis", "steps", "assembly_seconds", "solve_seconds"}, trows);
  return w.finish({{"rows", details}});
}

struct Resources {
  std::unique_ptr<PlaTable> pla;
  std::unique_ptr<MlpWeights> nn;
  std::string pla_path, nn_path;
  double pla_build_seconds = 0.0;
};

std::string resolve_nn_path(const json& spec) {
  std::string p = spec.at("nn_weights").get<std::string>();
  if (p.empty())
    if (const char* env = std::getenv("FENE_NN_WEIGHTS")) p = env;
  if (p.empty()) p = FENE_DEFAULT_NN_WEIGHTS;
  return p;
}

Resources load_resources(const json& spec, const std::string& dir) {
  Resources r;
  const double b = spec.at("b").get<double>();
  std::set<std::string> models;
  for (const auto& m : spec.at("models")) models.insert(m.get<std::string>());
  if (models.count("qe_nn")) {
    r.nn_path = resolve_nn_path(spec);
    if (r.nn_path.empty() || !fs::exists(r.nn_path))
      throw ResourceError("nn_weights: network weights not found at '" + r.nn_path +
                          "' (set nn_weights or FENE_NN_WEIGHTS, or drop qe_nn from models)");
    try {
      r.nn = std::make_unique<MlpWeights>(nn_load(r.nn_path));
    } catch (const std::exception& e) {
      throw ResourceError(std::string("nn_weights: ") + e.what());
    }
    if (r.nn->b != b)
      throw ResourceError("nn_weights: network was trained for b = " + fmt_g(r.nn->b) + ", spec has b = " + fmt_g(b));
  }
  if (models.count("qe_pla")) {
    r.pla_path = spec.at("pla_table").get<std::string>();
    if (r.pla_path.empty()) r.pla_path = (fs::path(dir) / ("pla_table_b" + fmt_g(b) + ".json")).string();
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r.pla = std::make_unique<PlaTable>(load_or_build_pla_table(r.pla_path, b, {}));
    } catch (const std::exception& e) {
      throw ResourceError(std::string("pla_table: ") + e.what());
    }
    r.pla_build_seconds = seconds_since(t0);
    if (r.pla->b() != b)
      throw ResourceError("pla_table: table was built for b = " + fmt_g(r.pla->b()) + ", spec has b = " + fmt_g(b));
  }
  return r;
}

ClosureModel model_kind(const std::string& name) { return name == "fene_p_consistent" ? ClosureModel::FeneP : parse_closure_model(name); }

struct CaseResult {
  FlowCase flow;
  Reference ref;
  std::vector<std::pair<std::string, ClosureComparison>> closures;
};

CaseResult run_case(const json& spec, const FlowCase& fc, const Resources& res) {
  SteadyOptions so;
  so.tol = spec.at("steady_tol").get<double>();
  so.t_max = spec.at("t_max").get<double>();
  const SolverConfig cfg = solver_config(spec, fc.De, fc.K);
  CaseResult out{fc,
                 compute_reference(cfg, so, spec.at("ball_np").get<int>(), spec.at("ball_ntheta").get<int>(),
                                   spec.at("ball_nphi").get<int>()),
                 {}};
  if (!out.ref.steady.converged)
    throw NumericalFailure("spectral reference did not reach steady state by t = " + fmt_g(out.ref.steady.t) +
                               " (rate " + fmt_e(out.ref.steady.rate) + ")",
                           out.ref.steady.steps);
  ClosureIntegration ci;
  ci.dt = spec.at("closure_dt").get<double>();
  ci.T = spec.at("closure_T").get<double>();
  ci.steady_tol = spec.at("closure_steady_tol").get<double>();
  for (const auto& mj : spec.at("models")) {
    const std::string name = mj.get<std::string>();
    ClosureResources cr;
    cr.pla = res.pla.get();
    cr.nn = res.nn.get();
    cr.fene_p_consistent = name == "fene_p_consistent";
    out.closures.emplace_back(name, compare_closure(model_kind(name), out.ref, cr, ci));
  }
  return out;
}

std::vector<std::string> detail_row(const std::string& label, const std::string& model, const Eigen::Matrix3d& C,
                                    const StressTensor& st, double cdf, double t12, double n1, int peaks,
                                    const std::string& status) {
  return {label, model, fmt_e(cdf), fmt_e(t12), fmt_e(n1), fmt_e(C(0, 0)), fmt_e(C(1, 1)), fmt_e(C(2, 2)),
          fmt_e(C(0, 1)), fmt_e(st.tau(0, 1)), fmt_e(st.N1()), std::to_string(peaks), status};
}

const std::vector<std::string> kDetailCols = {"kappa", "model", "cdf_l2_error", "tau12_error", "N1_error", "C11",
                                              "C22", "C33", "C12", "tau12", "N1", "slice_peaks", "status"};

std::string status_of(const ClosureComparison& c) {
  if (!c.ok) {
    std::string f = c.failure;
    for (char& ch : f)
      if (ch == ',' || ch == '\n') ch = ';';
    return "failed: " + f;
  }
  return c.steady ? "steady" : "not_steady";
}

// Benchmarks: detail table, timing, slices along the stretching axis, reference plane grid.
ExperimentReport run_benchmark(ExperimentKind kind, const json& spec, const std::string& dir) {
  Writer w(spec, dir);
  const std::string stem = spec.at("kind").get<std::string>();
  const Resources res = load_resources(spec, dir);
  const int npts = spec.at("slice_points").get<int>();
  const int plane = spec.at("plane_resolution").get<int>();
  const double b = spec.at("b").get<double>();

  std::vector<std::vector<std::string>> rows, trows;
  json summary = json::array();
  int failed = 0;
  for (const FlowCase& fc : flow_cases(kind, spec)) {
    const CaseResult cr = run_case(spec, fc, res);
    const std::string label = fc.kappa.empty() ? "custom" : fc.kappa;
    const Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
    const auto ref_f = solver_density(cr.ref.op->layout(), cr.ref.steady.coeffs);
    const auto ref_slice = axis_slice(ref_f, axis, npts);
    std::vector<std::vector<double>> columns;
    std::vector<std::string> slice_cols = {"q1", "spectral"};
    auto values = [](const std::vector<std::pair<double, double>>& s) {
      std::vector<double> v;
      for (const auto& p : s) v.push_back(p.second);
      return v;
    };
    columns.push_back(values(ref_slice));
    const int ref_peaks = count_local_maxima(columns.back());
    rows.push_back(detail_row(label, "spectral", cr.ref.C.C, cr.ref.stress, 0.0, 0.0, 0.0, ref_peaks,
                              cr.ref.steady.converged ? "steady" : "not_steady"));
    trows.push_back({label, "spectral", fmt_e(cr.ref.assembly_seconds), fmt_e(cr.ref.steady.seconds),
                     std::to_string(cr.ref.steady.steps)});
    json jcase = {{"kappa", label}, {"spectral_peaks", ref_peaks}, {"models", json::object()}};
    for (const auto& [name, c] : cr.closures) {
      int peaks = -1;
      if (c.ok) {
        ClosureResources rr;
        rr.pla = res.pla.get();
        rr.nn = res.nn.get();
        columns.push_back(values(closure_slice(model_kind(name), c.C, b, rr, *cr.ref.ball, axis, npts)));
        peaks = count_local_maxima(columns.back());
      } else {
        columns.emplace_back(ref_slice.size(), std::nan(""));
        ++failed;
      }
      slice_cols.push_back(name);
      rows.push_back(detail_row(label, name, c.C, c.stress, c.cdf_error, c.tau12_error, c.N1_error, peaks, status_of(c)));
      trows.push_back({label, name, fmt_e(0.0), fmt_e(c.seconds), std::to_string(c.steps)});
      jcase["models"][name] = {{"ok", c.ok},         {"cdf_l2_error", c.cdf_error}, {"tau12_error", c.tau12_error},
                               {"N1_error", c.N1_error}, {"slice_peaks", peaks},      {"seconds", c.seconds}};
    }
    std::vector<std::vector<std::string>> srows;
    for (std::size_t i = 0; i < ref_slice.size(); ++i) {
      std::vector<std::string> r = {fmt_e(ref_slice[i].first)};
      for (const auto& col : columns) r.push_back(fmt_e(col[i]));
      srows.push_back(r);
    }
    w.table(stem + "_slice_k" + label + ".csv", slice_cols, srows, "density along the q1 axis");
    if (plane > 0) {
      SliceSpec ps;
      ps.resolution = plane;
      const std::string name = stem + "_plane_k" + label + "_spectral.csv";
      export_field_grid(w.path(name), ref_f, ps, "experiment=" + stem + " spec_hash=" + spec_hash(spec));
      w.add_file(name);
    }
    summary.push_back(jcase);
  }
  w.table(stem + ".csv", kDetailCols, rows, "errors are relative unweighted L2 over the ball and absolute stress differences");
  w.timing(stem + ".timing.csv", {"kappa", "model", "assembly_seconds", "solve_seconds", "steps"}, trows);
  return w.finish({{"cases", summary}, {"pla_table", res.pla_path}, {"nn_weights", res.nn_path}}, failed);
}

ExperimentReport run_compare_closures(const json& spec, const std::string& dir) {
  Writer w(spec, dir);
  const Resources res = load_resources(spec, dir);
  std::vector<std::string> cols = {"kappa"};
  for (const auto& m : spec.at("models")) cols.push_back(m.get<std::string>());
  std::vector<std::vector<std::string>> wide, detail, trows;
  json summary = json::array();
  int failed = 0;
  for (const FlowCase& fc : flow_cases(ExperimentKind::CompareClosures, spec)) {
    const CaseResult cr = run_case(spec, fc, res);
    const std::string label = fc.kappa.empty() ? "custom" : fc.kappa;
    std::vector<std::string> row = {label};
    json jcase = {{"kappa", label}};
    trows.push_back({label, "spectral", fmt_e(cr.ref.assembly_seconds), fmt_e(cr.ref.steady.seconds),
                     std::to_string(cr.ref.steady.steps)});
    for (const auto& [name, c] : cr.closures) {
      row.push_back(c.ok ? fmt_e(c.cdf_error) : "nan");
      if (!c.ok) ++failed;
      detail.push_back(detail_row(label, name, c.C, c.stress, c.cdf_error, c.tau12_error, c.N1_error, -1, status_of(c)));
      trows.push_back({label, name, fmt_e(0.0), fmt_e(c.seconds), std::to_string(c.steps)});
      jcase[name] = c.ok ? json(c.cdf_error) : json(nullptr);
    }
    wide.push_back(row);
    summary.push_back(jcase);
  }
  w.table("compare_closures.csv", cols, wide, "CDF relative L2 error per closure model; flow " + spec.at("flow").get<std::string>());
  w.table("compare_closures_detail.csv", kDetailCols, detail);
  w.timing("compare_closures.timing.csv", {"kappa", "model", "assembly_seconds", "solve_seconds", "steps"}, trows);
  return w.finish({{"cdf_l2_error", summary}, {"pla_table", res.pla_path}, {"nn_weights", res.nn_path}}, failed);
}

ExperimentReport run_fene_p_stress_table(const json& spec, const std::string& dir) {
  Writer w(spec, dir);
  const Resources res = load_resources(spec, dir);
  std::vector<std::vector<std::string>> rows, trows;
  json summary = json::array();
  int failed = 0;
  for (const FlowCase& fc : flow_cases(ExperimentKind::FenePStressTable, spec)) {
    const CaseResult cr = run_case(spec, fc, res);
    trows.push_back({fmt_g(fc.De), "spectral", fmt_e(cr.ref.assembly_seconds), fmt_e(cr.ref.steady.seconds),
                     std::to_string(cr.ref.steady.steps)});
    for (const auto& [name, c] : cr.closures) {
      if (!c.ok) ++failed;
      rows.push_back({fmt_g(fc.De), name, c.ok ? fmt_e(c.cdf_error) : "nan", c.ok ? fmt_e(c.tau12_error) : "nan",
                      c.ok ? fmt_e(c.N1_error) : "nan", status_of(c)});
      trows.push_back({fmt_g(fc.De), name, fmt_e(0.0), fmt_e(c.seconds), std::to_string(c.steps)});
      summary.push_back({{"De", fc.De},
                         {"model", name},
                         {"ok", c.ok},
                         {"cdf_l2_error", c.cdf_error},
                         {"tau12_error", c.tau12_error},
                         {"N1_error", c.N1_error}});
    }
  }
  w.table("fene_p_stress_table.csv", {"De", "model", "cdf_l2_error", "tau12_error", "N1_abs_error", "status"}, rows,
          "flow " + spec.at("flow").get<std::string>() + " kappa " + fmt_g(spec.at("kappa").get<double>()));
  w.timing("fene_p_stress_table.timing.csv", {"De", "model", "assembly_seconds", "solve_seconds", "steps"}, trows);
  return w.finish({{"rows", summary}, {"pla_table", res.pla_path}, {"nn_weights", res.nn_path}}, failed);
}

QeSampling sampling_of(const json& spec) {
  QeSampling s;
  s.count = spec.at("count").get<int>();
  s.lambda_min = spec.at("lambda_min").get<double>();
  s.lambda_max = spec.at("lambda_max").get<double>();
  s.trace_margin = spec.at("trace_margin").get<double>();
  s.seed = spec.at("seed").get<std::uint64_t>();
  return s;
}

PlaGridSpec grid_of(const json& spec) {
  PlaGridSpec g;
  g.nt = spec.at("nt").get<int>();
  g.nalpha = spec.at("nalpha").get<int>();
  g.nbeta = spec.at("nbeta").get<int>();
  g.t_min = spec.at("t_min").get<double>();
  g.t_max = spec.at("t_max").get<double>();
  g.share_floor = spec.at("share_floor").get<double>();
  g.c_floor = spec.at("c_floor").get<double>();
  g.eta_scale = spec.at("eta_scale").get<double>();
  g.alpha_shift = spec.at("alpha_shift").get<double>();
  g.asymptotic_residual = spec.at("asymptotic_residual").get<bool>();
  return g;
}

ExperimentReport run_gen_dataset(const json& spec, const std::string& dir) {
  Writer w(spec, dir);
  const auto t0 = std::chrono::steady_clock::now();
  const QeDataset d = gen_dataset(spec.at("b").get<double>(), sampling_of(spec), spec.at("threads").get<int>());
  const double secs = seconds_since(t0);
  const std::string name = spec.at("file").get<std::string>();
  write_dataset(d, w.path(name));
  w.add_file(name);
  w.add_file(name + ".json");
  double tmin = 1.0, tmax = 0.0;
  for (const auto& r : d.records) {
    tmin = std::min(tmin, r.c.sum());
    tmax = std::max(tmax, r.c.sum());
  }
  w.timing("gen_dataset.timing.csv", {"records", "discarded", "solve_seconds"},
           {{std::to_string(d.records.size()), std::to_string(d.discarded), fmt_e(secs)}});
  return w.finish({{"records", d.records.size()}, {"discarded", d.discarded}, {"trace_range", {tmin, tmax}}});
}

ExperimentReport run_build_pla_table(const json& spec, const std::string& dir) {
  Writer w(spec, dir);
  const auto t0 = std::chrono::steady_clock::now();
  const PlaTable t = PlaTable::build(spec.at("b").get<double>(), grid_of(spec), spec.at("threads").get<int>());
  const double secs = seconds_since(t0);
  const std::string name = spec.at("file").get<std::string>();
  t.save(w.path(name));
  w.add_file(name);
  w.timing("build_pla_table.timing.csv", {"nodes", "build_residual", "solve_seconds"},
           {{std::to_string(spec.at("nt").get<int>() * spec.at("nalpha").get<int>() * spec.at("nbeta").get<int>()),
             fmt_e(t.build_residual()), fmt_e(secs)}});
  return w.finish({{"build_residual", t.build_residual()}, {"schema", PlaTable::kSchema}});
}

}  // namespace

SpecError::SpecError(std::vector<std::string> issues)
    : std::invalid_argument([&] {
        std::string s = "invalid experiment spec";
        for (const auto& i : issues) s += "\n  " + i;
        return s;
      }()),
      issues_(std::move(issues)) {}

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, n] : kKindNames)
    if (k == kind) return n;
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  std::string known;
  for (const auto& [k, n] : kKindNames) known += (known.empty() ? "" : ", ") + n;
  throw SpecError({"kind: unknown experiment '" + name + "' (" + known + ")"});
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> v;
    for (const auto& [k, n] : kKindNames) v.push_back(k);
    return v;
  }();
  return kinds;
}

json default_spec(ExperimentKind kind) {
  json d;
  const json models = json::array({"fene_p", "fene_p_consistent", "qe_pla", "qe_nn"});
  switch (kind) {
    case ExperimentKind::MmsConvergence:
      d = {{"b", 12.0},
           {"s", 6.0},
           {"De", 24.0},
           {"K", matrix_json(Eigen::Vector3d(1.0, -1.0, 0.0).asDiagonal())},
           {"t0", 0.5},
           {"T", 1.0},
           {"resolutions", {10, 20, 30, 40}},
           {"bases", {"JG1", "JGinf"}},
           {"dt", 1e-4},
           {"dt_fine", 2.5e-5},
           {"dt_fine_from", 40},
           {"allow_unstable_dt", false}};
      break;
    case ExperimentKind::BenchmarkExtensional:
    case ExperimentKind::BenchmarkMixed:
      d = solver_defaults();
      d["De"] = 1.0;
      d["kappa"] = {1.0};
      d["K"] = nullptr;
      d["models"] = models;
      d["slice_points"] = 401;
      d["plane_resolution"] = 101;
      if (kind == ExperimentKind::BenchmarkExtensional) d["kappa"] = {20.0};
      break;
    case ExperimentKind::CompareClosures:
      d = solver_defaults();
      d["De"] = 1.0;
      d["flow"] = "mixed";
      d["kappa"] = {1.0, 2.0, 5.0, 10.0, 20.0};
      d["K"] = nullptr;
      d["models"] = models;
      break;
    case ExperimentKind::FenePStressTable:
      d = solver_defaults();
      d["De"] = {1.0, 2.0, 5.0, 10.0};
      d["flow"] = "mixed";
      d["kappa"] = 1.0;
      d["models"] = {"fene_p", "fene_p_consistent"};
      break;
    case ExperimentKind::GenDataset:
      d = {{"b", 12.0},         {"count", 20000},       {"lambda_min", -10.0}, {"lambda_max", 60.0},
           {"trace_margin", 1e-3}, {"threads", 0},      {"file", "qe_dataset.csv"}};
      break;
    case ExperimentKind::BuildPlaTable: {
      const PlaGridSpec g;
      d = {{"b", 12.0},
           {"nt", g.nt},
           {"nalpha", g.nalpha},
           {"nbeta", g.nbeta},
           {"t_min", g.t_min},
           {"t_max", g.t_max},
           {"share_floor", g.share_floor},
           {"c_floor", g.c_floor},
           {"eta_scale", g.eta_scale},
           {"alpha_shift", g.alpha_shift},
           {"asymptotic_residual", g.asymptotic_residual},
           {"threads", 0},
           {"file", "pla_table.json"}};
      break;
    }
  }
  d["seed"] = 1;
  d["kind"] = to_string(kind);
  return d;
}

json normalize_spec(const json& raw) {
  if (!raw.is_object()) throw SpecError({"(root): spec must be a JSON object"});
  if (!raw.contains("kind") || !raw.at("kind").is_string()) throw SpecError({"kind: missing experiment kind"});
  const ExperimentKind kind = parse_experiment_kind(raw.at("kind").get<std::string>());
  json spec = default_spec(kind);
  std::vector<std::string> issues;
  for (const auto& [key, value] : raw.items()) {
    if (key == "kind") continue;
    if (!spec.contains(key)) {
      issues.push_back(key + ": unknown key for " + to_string(kind));
      continue;
    }
    json v = value;
    const json& def = spec.at(key);
    if (key == "K") {
      if (!(v.is_null() || valid_matrix_json(v))) issues.push_back("K: must be a 3x3 array of numbers");
      else {
        if (!v.is_null())
          for (auto& r : v)
            for (auto& e : r) e = e.get<double>();
        spec[key] = v;
      }
      continue;
    }
    if (!type_matches(def, v)) {
      issues.push_back(key + ": expected " + std::string(def.type_name()) + ", got " + value.type_name());
      continue;
    }
    spec[key] = v;
  }
  if (spec.at("seed").get<long long>() < 0) issues.push_back("seed: must be non-negative");
  if (!issues.empty()) throw SpecError(issues);

  if (uses_solver(kind)) {
    check_solver_spec(kind, spec, issues);
  } else if (kind == ExperimentKind::MmsConvergence) {
    check_mms_spec(spec, issues);
  } else {
    if (!(spec.at("b").get<double>() > 2.0)) issues.push_back("b: extensibility must exceed 2");
    if (spec.at("threads").get<int>() < 0) issues.push_back("threads: must be >= 0 (0 uses all cores)");
    const std::string file = spec.at("file").get<std::string>();
    if (file.empty() || fs::path(file).has_parent_path()) issues.push_back("file: must be a plain file name inside the output directory");
    try {
      if (kind == ExperimentKind::GenDataset) {
        if (spec.at("count").get<int>() < 1) issues.push_back("count: must be positive");
        else sampling_of(spec).validate();
      } else {
        grid_of(spec).validate();
      }
    } catch (const std::invalid_argument& e) {
      issues.push_back(e.what());
    }
  }
  if (!issues.empty()) throw SpecError(issues);
  return spec;
}

json read_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError({"--config: cannot read '" + path + "'"});
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SpecError({"--config: '" + path + "' is not valid JSON: " + e.what()});
  }
}

void apply_override(json& spec, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw SpecError({"--override: expected key=value, got '" + assignment + "'"});
  const std::string key = assignment.substr(0, eq), value = assignment.substr(eq + 1);
  json v = json::parse(value, nullptr, false);
  spec[key] = v.is_discarded() ? json(value) : v;
}

std::string spec_hash(const json& normalized) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : normalized.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string code_version() { return FENE_CODE_VERSION; }

ExperimentReport run_experiment(const json& normalized, const std::string& output_dir) {
  const ExperimentKind kind = parse_experiment_kind(normalized.at("kind").get<std::string>());
  switch (kind) {
    case ExperimentKind::MmsConvergence:
      return run_mms_convergence(normalized, output_dir);
    case ExperimentKind::BenchmarkExtensional:
    case ExperimentKind::BenchmarkMixed:
      return run_benchmark(kind, normalized, output_dir);
    case ExperimentKind::CompareClosures:
      return run_compare_closures(normalized, output_dir);
    case ExperimentKind::FenePStressTable:
      return run_fene_p_stress_table(normalized, output_dir);
    case ExperimentKind::GenDataset:
      return run_gen_dataset(normalized, output_dir);
    case ExperimentKind::BuildPlaTable:
      return run_build_pla_table(normalized, output_dir);
  }
  throw SpecError({"kind: unhandled experiment"});
}

}  // namespace fene
