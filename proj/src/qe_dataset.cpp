#include "fene/qe_dataset.hpp"

#include "fene/qe_map.hpp"
#include "fene/tensor3.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fene {

void QeSampling::validate() const {
  if (count < 1) throw std::invalid_argument("count: must be positive");
  if (!(lambda_min < lambda_max)) throw std::invalid_argument("lambda_min: must be below lambda_max");
  if (std::max(std::abs(lambda_min), std::abs(lambda_max)) > kQeLambdaLimit)
    throw std::invalid_argument("lambda_max: outside the calibrated range of the forward map");
  if (!(trace_margin > 0.0 && trace_margin < 1.0)) throw std::invalid_argument("trace_margin: must lie in (0, 1)");
}

QeDataset gen_dataset(double b, const QeSampling& spec, int threads) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Latin hypercube: one stratum per sample on each axis, strata shuffled per axis
  std::vector<Eigen::Vector3d> lambdas(spec.count);
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<int> perm(spec.count);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < spec.count; ++i) {
      const double u = (perm[i] + unit(rng)) / spec.count;
      lambdas[i](axis) = spec.lambda_min + u * (spec.lambda_max - spec.lambda_min);
    }
  }
  for (auto& l : lambdas) std::sort(l.data(), l.data() + 3, std::greater<double>());

  std::vector<Eigen::Vector3d> cs(spec.count);
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&]() {
    try {
      for (int i = next++; i < spec.count; i = next++) cs[i] = qe_forward(lambdas[i], b);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
      next = spec.count;
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  QeDataset d;
  d.b = b;
  d.sampling = spec;
  for (int i = 0; i < spec.count; ++i) {
    Eigen::Vector3d c = cs[i];
    if (c.sum() >= 1.0 - spec.trace_margin || !sorted_admissible(c)) {
      ++d.discarded;
      continue;
    }
    d.records.push_back({c, lambdas[i]});
  }
  if (d.records.empty()) throw std::runtime_error("dataset is empty after filtering");
  return d;
}

void write_dataset(const QeDataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "c1,c2,c3,l1,l2,l3\n" << std::setprecision(17);
  for (const auto& r : d.records)
    out << r.c(0) << ',' << r.c(1) << ',' << r.c(2) << ',' << r.lambda(0) << ',' << r.lambda(1) << ','
        << r.lambda(2) << '\n';
  nlohmann::json meta = {{"b", d.b},
                         {"count", d.records.size()},
                         {"requested", d.sampling.count},
                         {"discarded", d.discarded},
                         {"sampling",
                          {{"method", "latin_hypercube"},
                           {"lambda_box", {d.sampling.lambda_min, d.sampling.lambda_max}},
                           {"trace_margin", d.sampling.trace_margin},
                           {"seed", d.sampling.seed}}}};
  std::ofstream m(path + ".json");
  if (!m) throw std::runtime_error("cannot write " + path + ".json");
  m << meta.dump(2) << '\n';
}

QeDataset read_dataset(const std::string& path) {
  std::ifstream m(path + ".json");
  if (!m) throw std::runtime_error("missing dataset metadata " + path + ".json");
  nlohmann::json meta;
  m >> meta;
  QeDataset d;
  d.b = meta.at("b").get<double>();
  d.discarded = meta.value("discarded", 0L);
  const auto& s = meta.at("sampling");
  d.sampling.count = meta.value("requested", 0);
  d.sampling.lambda_min = s.at("lambda_box")[0].get<double>();
  d.sampling.lambda_max = s.at("lambda_box")[1].get<double>();
  d.sampling.trace_margin = s.value("trace_margin", 1e-3);
  d.sampling.seed = s.value("seed", std::uint64_t{1});

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != "c1,c2,c3,l1,l2,l3") throw std::runtime_error(path + ": unexpected header \"" + line + "\"");
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    double v[6];
    char comma;
    for (int k = 0; k < 6; ++k) {
      if (!(ss >> v[k]) || (k < 5 && !(ss >> comma))) throw std::runtime_error(path + ": bad row " + std::to_string(row));
    }
    QeRecord r{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    if (!sorted_admissible(r.c)) throw std::runtime_error(path + ": row " + std::to_string(row) + " is not a sorted admissible triple");
    d.records.push_back(r);
  }
  if (static_cast<long>(d.records.size()) != meta.at("count").get<long>())
    throw std::runtime_error(path + ": record count disagrees with metadata");
  return d;
}

}  // namespace fene
