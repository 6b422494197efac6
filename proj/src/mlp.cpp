#include "fene/mlp.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace fene {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw MlpFormatError(field + ": " + msg);
}

Eigen::Vector3d triple(const json& j, const std::string& field) {
  if (!j.contains(field)) fail(field, "missing");
  const auto& a = j.at(field);
  if (!a.is_array() || a.size() != 3) fail(field, "expected 3 numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_number()) fail(field, "expected 3 numbers");
    v(i) = a[i].get<double>();
  }
  return v;
}

json to_json(const Eigen::Vector3d& v) { return json::array({v(0), v(1), v(2)}); }

}  // namespace

void MlpWeights::validate() const {
  if (arch != std::vector<int>{3, 64, 64, 3}) fail("arch", "expected [3, 64, 64, 3]");
  if (activation != "tanh") fail("activation", "expected \"tanh\", got \"" + activation + "\"");
  const std::size_t layers = arch.size() - 1;
  if (weights.size() != layers) fail("weights", "expected " + std::to_string(layers) + " matrices");
  if (biases.size() != layers) fail("biases", "expected " + std::to_string(layers) + " vectors");
  for (std::size_t k = 0; k < layers; ++k) {
    const std::string tag = "[" + std::to_string(k) + "]";
    if (weights[k].rows() != arch[k + 1] || weights[k].cols() != arch[k])
      fail("weights" + tag, "shape does not match arch");
    if (biases[k].size() != arch[k + 1]) fail("biases" + tag, "length does not match arch");
    if (!weights[k].allFinite() || !biases[k].allFinite()) fail("weights" + tag, "non-finite entry");
  }
  if (!(input_std.minCoeff() > 0.0)) fail("input_std", "entries must be > 0");
  if (!(output_std.minCoeff() > 0.0)) fail("output_std", "entries must be > 0");
}

MlpWeights MlpWeights::zeros() {
  MlpWeights w;
  for (std::size_t k = 0; k + 1 < w.arch.size(); ++k) {
    w.weights.push_back(Eigen::MatrixXd::Zero(w.arch[k + 1], w.arch[k]));
    w.biases.push_back(Eigen::VectorXd::Zero(w.arch[k + 1]));
  }
  return w;
}

MlpWeights nn_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MlpFormatError("cannot read weight file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw MlpFormatError("malformed weight file " + path + ": " + e.what());
  }
  MlpWeights w;
  try {
    w.arch = j.at("arch").get<std::vector<int>>();
    w.activation = j.at("activation").get<std::string>();
    if (w.arch.size() < 2) fail("arch", "needs at least two layers");
    const auto& W = j.at("weights");
    const auto& B = j.at("biases");
    if (!W.is_array() || !B.is_array()) fail("weights", "expected arrays of layers");
    for (std::size_t k = 0; k < W.size(); ++k) {
      const auto rows = W[k].get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != m.cols())
          fail("weights[" + std::to_string(k) + "]", "ragged rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
      }
      w.weights.push_back(std::move(m));
    }
    for (std::size_t k = 0; k < B.size(); ++k) {
      const auto v = B[k].get<std::vector<double>>();
      w.biases.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    w.input_mean = triple(j, "input_mean");
    w.input_std = triple(j, "input_std");
    w.output_mean = triple(j, "output_mean");
    w.output_std = triple(j, "output_std");
    if (j.contains("metadata")) {
      const auto& m = j.at("metadata");
      w.b = m.value("b", 0.0);
      w.dataset_id = m.value("dataset_id", std::string());
    }
    if (j.contains("probes")) {
      for (const auto& p : j.at("probes")) w.probes.push_back({triple(p, "input"), triple(p, "output")});
    }
  } catch (const json::exception& e) {
    throw MlpFormatError("weight file " + path + ": " + e.what());
  }
  w.validate();
  return w;
}

void nn_save(const MlpWeights& w, const std::string& path) {
  w.validate();
  json j;
  j["arch"] = w.arch;
  j["activation"] = w.activation;
  json W = json::array(), B = json::array();
  for (std::size_t k = 0; k < w.weights.size(); ++k) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.weights[k].rows(); ++r) {
      std::vector<double> row(w.weights[k].cols());
      for (Eigen::Index c = 0; c < w.weights[k].cols(); ++c) row[c] = w.weights[k](r, c);
      rows.push_back(row);
    }
    W.push_back(rows);
    B.push_back(std::vector<double>(w.biases[k].data(), w.biases[k].data() + w.biases[k].size()));
  }
  j["weights"] = W;
  j["biases"] = B;
  j["input_mean"] = to_json(w.input_mean);
  j["input_std"] = to_json(w.input_std);
  j["output_mean"] = to_json(w.output_mean);
  j["output_std"] = to_json(w.output_std);
  j["metadata"] = {{"b", w.b}, {"dataset_id", w.dataset_id}};
  json probes = json::array();
  for (const auto& p : w.probes) probes.push_back({{"input", to_json(p.input)}, {"output", to_json(p.output)}});
  j["probes"] = probes;
  std::ofstream out(path);
  if (!out) throw MlpFormatError("cannot write weight file " + path);
  out << j.dump(1);
}

Eigen::Vector3d nn_infer(const MlpWeights& w, const Eigen::Vector3d& c) {
  Eigen::VectorXd a = (c - w.input_mean).cwiseQuotient(w.input_std);
  const std::size_t last = w.weights.size() - 1;
  for (std::size_t k = 0; k < last; ++k) a = (w.weights[k] * a + w.biases[k]).array().tanh().matrix();
  const Eigen::Vector3d z = w.weights[last] * a + w.biases[last];
  return z.cwiseProduct(w.output_std) + w.output_mean;
}

double nn_probe_deviation(const MlpWeights& w) {
  double worst = 0.0;
  for (const auto& p : w.probes) {
    const Eigen::Vector3d d = nn_infer(w, p.input) - p.output;
    const double scale = std::max(p.output.cwiseAbs().maxCoeff(), 1.0);
    worst = std::max(worst, d.cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

}  // namespace fene
