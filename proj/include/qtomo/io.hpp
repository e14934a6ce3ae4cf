#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtomo/denoiser_nn.hpp"
#include "qtomo/process_tomo.hpp"
#include "qtomo/quantum_core.hpp"
#include "qtomo/sampler.hpp"

namespace qtomo {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// complex matrices and vectors: paired real arrays, row-major

inline Json matrix_to_json(const ComplexMatrix& m) {
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(m.size()));
  im.reserve(static_cast<std::size_t>(m.size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      re.push_back(m(i, j).real());
      im.push_back(m(i, j).imag());
    }
  return Json{{"re", re}, {"im", im}};
}

inline ComplexMatrix matrix_from_json(const Json& j, int rows, int cols) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<int>(re.size()) != rows * cols || static_cast<int>(im.size()) != rows * cols)
    throw IoError("complex matrix: entry count does not match the stated shape");
  ComplexMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j2 = 0; j2 < cols; ++j2)
      m(i, j2) = Complex(re[static_cast<std::size_t>(i * cols + j2)],
                         im[static_cast<std::size_t>(i * cols + j2)]);
  return m;
}

inline Json vector_to_json(const ComplexVector& v) {
  std::vector<double> re(static_cast<std::size_t>(v.size())),
      im(static_cast<std::size_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) {
    re[static_cast<std::size_t>(i)] = v[i].real();
    im[static_cast<std::size_t>(i)] = v[i].imag();
  }
  return Json{{"re", re}, {"im", im}};
}

inline ComplexVector vector_from_json(const Json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (re.size() != im.size()) throw IoError("complex vector: re/im length mismatch");
  ComplexVector v(static_cast<int>(re.size()));
  for (std::size_t i = 0; i < re.size(); ++i)
    v[static_cast<int>(i)] = Complex(re[i], im[i]);
  return v;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.precision(17);
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return in;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// POVM file: {"dim", "kind", "elements", "labels"}

inline void save_povm(const Povm& povm, const std::filesystem::path& path,
                      const std::string& kind = "sic") {
  Json j;
  j["dim"] = povm.dim();
  j["kind"] = kind;
  j["labels"] = povm.labels();
  Json elements = Json::array();
  for (const auto& e : povm.elements()) elements.push_back(matrix_to_json(e));
  j["elements"] = std::move(elements);
  detail::open_out(path) << j.dump(2) << '\n';
}

inline Povm load_povm(const std::filesystem::path& path) {
  Json j;
  try {
    detail::open_in(path) >> j;
    const int dim = j.at("dim");
    std::vector<ComplexMatrix> elements;
    for (const auto& e : j.at("elements")) elements.push_back(matrix_from_json(e, dim, dim));
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j["labels"].get<std::vector<std::string>>();
    return Povm(dim, std::move(elements), std::move(labels));
  } catch (const Json::exception& e) {
    throw IoError("malformed POVM file " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// dataset: JSON Lines, frequencies recomputed on load (exact-mode records
// store them directly since no counts exist)

inline Json record_to_json(const TomographyRecord& rec) {
  Json j;
  j["id"] = rec.id;
  if (rec.true_state) j["state"] = vector_to_json(rec.true_state->amplitudes());
  j["ideal_probs"] = std::vector<double>(rec.ideal_probs.data(),
                                         rec.ideal_probs.data() + rec.ideal_probs.size());
  j["shots"] = rec.shots;
  if (rec.shots == 0)
    j["freqs"] = std::vector<double>(rec.noisy_freqs.data(),
                                     rec.noisy_freqs.data() + rec.noisy_freqs.size());
  else
    j["counts"] = rec.counts;
  return j;
}

inline TomographyRecord record_from_json(const Json& j) {
  TomographyRecord rec;
  rec.id = j.at("id");
  if (j.contains("state")) rec.true_state = PureState(vector_from_json(j["state"]));
  const auto probs = j.at("ideal_probs").get<std::vector<double>>();
  rec.ideal_probs = Eigen::Map<const RealVector>(probs.data(), static_cast<int>(probs.size()));
  rec.shots = j.at("shots");
  if (rec.shots == 0) {
    const auto freqs = j.at("freqs").get<std::vector<double>>();
    rec.noisy_freqs = Eigen::Map<const RealVector>(freqs.data(), static_cast<int>(freqs.size()));
  } else {
    rec.counts = j.at("counts").get<std::vector<long long>>();
    long long total = 0;
    for (long long c : rec.counts) {
      if (c < 0) throw IoError("dataset record: negative count");
      total += c;
    }
    if (total != rec.shots) throw IoError("dataset record: counts do not sum to shots");
    rec.noisy_freqs.resize(static_cast<int>(rec.counts.size()));
    for (std::size_t k = 0; k < rec.counts.size(); ++k)
      rec.noisy_freqs[static_cast<int>(k)] =
          static_cast<double>(rec.counts[k]) / static_cast<double>(rec.shots);
  }
  return rec;
}

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  for (const auto& rec : dataset) out << record_to_json(rec).dump() << '\n';
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  Dataset dataset;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      dataset.push_back(record_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return dataset;
}

// ---------------------------------------------------------------------------
// network weights and training history

inline void save_weights(const NetworkParams& params, const std::filesystem::path& path,
                         const Json& train_config_echo = Json::object()) {
  Json j;
  j["dim"] = params.input_dim();
  j["dropout_p"] = params.dropout_p;
  j["train_config_echo"] = train_config_echo;
  Json layers = Json::array();
  for (const auto& layer : params.layers) {
    Json jl;
    jl["rows"] = layer.w.rows();
    jl["cols"] = layer.w.cols();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.w.size()));
    for (int i = 0; i < layer.w.rows(); ++i)
      for (int jj = 0; jj < layer.w.cols(); ++jj) w.push_back(layer.w(i, jj));
    jl["w"] = std::move(w);
    jl["b"] = std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size());
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);
  detail::open_out(path) << j.dump() << '\n';
}

inline NetworkParams load_weights(const std::filesystem::path& path) {
  Json j;
  try {
    detail::open_in(path) >> j;
    NetworkParams params;
    params.dropout_p = j.at("dropout_p");
    for (const auto& jl : j.at("layers")) {
      const int rows = jl.at("rows");
      const int cols = jl.at("cols");
      const auto w = jl.at("w").get<std::vector<double>>();
      const auto b = jl.at("b").get<std::vector<double>>();
      if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows)
        throw IoError("weights file: layer shape mismatch");
      LayerParams layer;
      layer.w.resize(rows, cols);
      for (int i = 0; i < rows; ++i)
        for (int jj = 0; jj < cols; ++jj)
          layer.w(i, jj) = w[static_cast<std::size_t>(i * cols + jj)];
      layer.b = Eigen::Map<const RealVector>(b.data(), rows);
      params.layers.push_back(std::move(layer));
    }
    if (params.layers.empty()) throw IoError("weights file: no layers");
    return params;
  } catch (const Json::exception& e) {
    throw IoError("malformed weights file " + path.string() + ": " + e.what());
  }
}

inline void save_history(const TrainHistory& history, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < history.epochs.size(); ++e)
    out << e << ',' << detail::fmt_double(history.epochs[e].train_loss) << ','
        << detail::fmt_double(history.epochs[e].val_loss) << '\n';
}

// ---------------------------------------------------------------------------
// reconstruction estimates: JSON Lines

struct EstimateRecord {
  int id = 0;
  std::string kind = "raw";  // raw | nn
  ComplexMatrix rho;
  std::optional<double> fidelity;
  double purity = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<ComplexVector> psi;  // pure-constrained estimate, when requested
  std::optional<double> fidelity_pure;
};

inline void save_estimates(const std::vector<EstimateRecord>& estimates,
                           const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  for (const auto& est : estimates) {
    Json j;
    j["id"] = est.id;
    j["kind"] = est.kind;
    j["rho"] = matrix_to_json(est.rho);
    if (est.fidelity) j["fidelity"] = *est.fidelity;
    j["purity"] = est.purity;
    j["iterations"] = est.iterations;
    j["converged"] = est.converged;
    if (est.psi) j["psi"] = vector_to_json(*est.psi);
    if (est.fidelity_pure) j["fidelity_pure"] = *est.fidelity_pure;
    out << j.dump() << '\n';
  }
}

inline std::vector<EstimateRecord> load_estimates(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::vector<EstimateRecord> estimates;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      EstimateRecord est;
      est.id = j.at("id");
      est.kind = j.value("kind", "raw");
      const auto& re = j.at("rho").at("re");
      const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(re.size()))));
      est.rho = matrix_from_json(j["rho"], dim, dim);
      if (j.contains("fidelity")) est.fidelity = j["fidelity"].get<double>();
      est.purity = j.at("purity");
      est.iterations = j.at("iterations");
      est.converged = j.at("converged");
      if (j.contains("psi")) est.psi = vector_from_json(j["psi"]);
      if (j.contains("fidelity_pure")) est.fidelity_pure = j["fidelity_pure"].get<double>();
      estimates.push_back(std::move(est));
    } catch (const Json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return estimates;
}

// ---------------------------------------------------------------------------
// process-tomography chi file

inline void save_chi(const ChiMatrix& chi, const ComplexMatrix& e1, const GouyEstimate& gouy,
                     const std::filesystem::path& path) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(chi.chi, Eigen::EigenvaluesOnly);
  Json j;
  j["dim"] = chi.dim;
  j["chi"] = matrix_to_json(chi.chi);
  std::vector<double> eigenvalues(es.eigenvalues().data(),
                                  es.eigenvalues().data() + es.eigenvalues().size());
  std::reverse(eigenvalues.begin(), eigenvalues.end());  // descending
  j["eigenvalues"] = std::move(eigenvalues);
  j["e1"] = matrix_to_json(e1);
  j["gouy"] = Json{{"phi1", gouy.phi1}, {"phi2", gouy.phi2}, {"per_mode", gouy.per_mode}};
  j["data_residual"] = chi.data_residual;
  j["model_mismatch"] = chi.model_mismatch;
  detail::open_out(path) << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// cross-talk CSV: rows = outcomes, columns = probes

inline void save_crosstalk_csv(const CrosstalkMatrix& m, const std::vector<std::string>& labels,
                               const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "outcome";
  for (int i = 0; i < m.probs.cols(); ++i) out << ",probe_" << i;
  out << '\n';
  for (int j = 0; j < m.probs.rows(); ++j) {
    out << (j < static_cast<int>(labels.size()) ? labels[static_cast<std::size_t>(j)]
                                                : std::to_string(j));
    for (int i = 0; i < m.probs.cols(); ++i) out << ',' << detail::fmt_double(m.probs(j, i));
    out << '\n';
  }
}

}  // namespace qtomo
