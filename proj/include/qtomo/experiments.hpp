#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qtomo/io.hpp"
#include "qtomo/mle.hpp"

namespace qtomo {

// ---------------------------------------------------------------------------
// scenario registry: single source of truth for the synthetic SPAM models

struct ScenarioDef {
  SpamKind kind = SpamKind::none;
  SpamParams params{};
};

/// clean = no corruption; gouy = Gouy phase conjugation; gouy+smf = Gouy
/// composed with uncorrected SMF filtering; agnostic = alias of gouy+smf (the
/// fully uncorrected apparatus, reconstructed with no analytic correction).
inline ScenarioDef scenario_registry(const std::string& name) {
  if (name == "clean") return {SpamKind::none, {}};
  if (name == "gouy") return {SpamKind::gouy, {}};
  if (name == "gouy+smf") return {SpamKind::both, {}};
  if (name == "agnostic") return {SpamKind::both, {}};
  throw ValidationError("unknown scenario '" + name +
                        "' (expected clean|gouy|gouy+smf|agnostic)");
}

// ---------------------------------------------------------------------------
// classical fidelity

/// Bhattacharyya coefficient sum_gamma sqrt(target * predicted), in [0, 1].
inline double bhattacharyya(const ProbDistribution& target, const ProbDistribution& predicted) {
  if (target.size() != predicted.size())
    throw ValidationError("bhattacharyya: length mismatch");
  double acc = 0.0;
  for (int k = 0; k < target.size(); ++k) acc += std::sqrt(target[k] * predicted[k]);
  return std::clamp(acc, 0.0, 1.0);
}

inline double bhattacharyya(const RealVector& target, const RealVector& predicted) {
  return bhattacharyya(ProbDistribution(target), ProbDistribution(predicted));
}

// ---------------------------------------------------------------------------
// evaluation reports

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

struct EvaluationReport {
  std::vector<int> ids;
  std::map<std::string, std::vector<double>> per_record;  // metric -> values, id-aligned
  std::map<std::string, MetricStats> aggregates;
  std::map<std::string, std::vector<long long>> histograms;  // 100 bins over [0, 1]
};

namespace detail {

inline MetricStats stats_of(const std::vector<double>& values) {
  MetricStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

inline std::vector<long long> histogram_100(const std::vector<double>& values) {
  std::vector<long long> bins(100, 0);
  for (double v : values) {
    const int b = std::clamp(static_cast<int>(v * 100.0), 0, 99);
    ++bins[static_cast<std::size_t>(b)];
  }
  return bins;
}

}  // namespace detail

/// Per-record and aggregate metrics for reconstruction estimates against the
/// ground-truth records. Estimates may mix kinds ("raw", "nn"); each kind
/// contributes its own metric columns. Fidelities are recomputed from the
/// stored density matrices, never trusted from the file.
inline EvaluationReport evaluate(const std::vector<EstimateRecord>& estimates,
                                 const Dataset& truths) {
  std::map<int, const TomographyRecord*> by_id;
  for (const auto& rec : truths) by_id[rec.id] = &rec;

  EvaluationReport report;
  std::map<int, bool> seen;
  for (const auto& est : estimates) {
    auto it = by_id.find(est.id);
    if (it == by_id.end())
      throw ValidationError("evaluate: estimate id " + std::to_string(est.id) +
                            " has no matching truth record");
    if (!seen[est.id]) {
      report.ids.push_back(est.id);
      seen[est.id] = true;
    }
    const TomographyRecord& truth = *it->second;
    const DensityMatrix rho{est.rho};
    report.per_record["purity_" + est.kind].push_back(purity(rho));
    if (truth.true_state) {
      report.per_record["fidelity_" + est.kind].push_back(fidelity(*truth.true_state, rho));
      if (est.psi)
        report.per_record["fidelity_pure_" + est.kind].push_back(
            fidelity(*truth.true_state, DensityMatrix::from_pure(PureState(*est.psi))));
    }
  }
  for (const auto& [name, values] : report.per_record) {
    report.aggregates[name] = detail::stats_of(values);
    report.histograms[name] = detail::histogram_100(values);
  }
  return report;
}

inline Json report_to_json(const EvaluationReport& report) {
  Json j;
  j["n_records"] = report.ids.size();
  Json agg = Json::object();
  for (const auto& [name, s] : report.aggregates)
    agg[name] = Json{{"mean", s.mean}, {"std", s.stddev}};
  j["aggregates"] = std::move(agg);
  Json hists = Json::object();
  for (const auto& [name, bins] : report.histograms) hists[name] = bins;
  j["histograms"] = std::move(hists);
  Json per = Json::object();
  for (const auto& [name, values] : report.per_record) per[name] = values;
  j["per_record"] = std::move(per);
  j["ids"] = report.ids;
  return j;
}

inline void save_report(const EvaluationReport& report, const std::filesystem::path& path) {
  detail::open_out(path) << report_to_json(report).dump(2) << '\n';
}

/// Histogram CSV: fixed bins of width 0.01 over [0, 1], one column per metric.
inline void save_hist_csv(const EvaluationReport& report, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "bin_lo,bin_hi";
  for (const auto& [name, bins] : report.histograms) out << ',' << name;
  out << '\n';
  for (int b = 0; b < 100; ++b) {
    out << detail::fmt_double(b / 100.0) << ',' << detail::fmt_double((b + 1) / 100.0);
    for (const auto& [name, bins] : report.histograms)
      out << ',' << bins[static_cast<std::size_t>(b)];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// reconstruction over record lists

struct ReconstructOptions {
  MleConfig mle{};
  bool pure = false;                      // additionally compute the pure-constrained estimate
  const NetworkParams* denoiser = nullptr;  // when set, reconstruct from predictions
};

/// MLE over every record; with a denoiser the noisy frequencies are replaced
/// by the network predictions first.
inline std::vector<EstimateRecord> reconstruct_records(const Dataset& records, const Povm& povm,
                                                       const ReconstructOptions& options) {
  std::vector<ProbDistribution> predictions;
  if (options.denoiser) predictions = predict_batch(*options.denoiser, records);

  std::vector<EstimateRecord> estimates;
  estimates.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RealVector freqs =
        options.denoiser ? predictions[i].values() : records[i].noisy_freqs;
    const ReconstructionResult res = mle_density(freqs, povm, options.mle);

    EstimateRecord est;
    est.id = records[i].id;
    est.kind = options.denoiser ? "nn" : "raw";
    est.rho = res.rho_hat.matrix();
    est.purity = purity(res.rho_hat);
    est.iterations = res.iterations_used;
    est.converged = res.converged;
    if (records[i].true_state) est.fidelity = fidelity(*records[i].true_state, res.rho_hat);
    if (options.pure) {
      auto [psi, degenerate] = dominant_eigenvector(res.rho_hat);
      est.psi = psi.amplitudes();
      if (records[i].true_state)
        est.fidelity_pure = fidelity(*records[i].true_state, DensityMatrix::from_pure(psi));
    }
    estimates.push_back(std::move(est));
  }
  return estimates;
}

// ---------------------------------------------------------------------------
// end-to-end pipeline

struct PipelineConfig {
  DatasetConfig dataset{};
  TrainConfig train{};
  MleConfig mle{};
  std::string scenario = "gouy";
  std::filesystem::path out_dir;
  std::uint64_t master_seed = 0;
};

/// Dataset generation, denoiser training, raw/denoised reconstruction of the
/// test split, metric evaluation, and report emission. Deterministic in
/// (config, master seed); any stage failure removes partial outputs.
inline EvaluationReport run_pipeline(PipelineConfig config, const Povm& povm) {
  namespace fs = std::filesystem;
  const ScenarioDef scenario = scenario_registry(config.scenario);
  config.dataset.spam = scenario.kind;
  config.dataset.spam_params = scenario.params;
  config.dataset.seed = config.master_seed;
  config.train.seed = config.master_seed;

  std::vector<fs::path> written;
  auto cleanup = [&]() {
    for (const auto& p : written) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  };
  std::string stage = "setup";
  try {
    stage = "dataset";
    const Dataset dataset = generate_dataset(config.dataset, povm);

    stage = "train";
    auto [params, history] = train(dataset, config.train);

    stage = "reconstruct";
    const std::size_t n_test = static_cast<std::size_t>(config.train.split[2]);
    const Dataset test(dataset.end() - static_cast<std::ptrdiff_t>(n_test), dataset.end());
    ReconstructOptions raw_opts;
    raw_opts.mle = config.mle;
    raw_opts.pure = true;
    const auto raw = reconstruct_records(test, povm, raw_opts);
    ReconstructOptions nn_opts = raw_opts;
    nn_opts.denoiser = &params;
    const auto nn = reconstruct_records(test, povm, nn_opts);

    stage = "evaluate";
    std::vector<EstimateRecord> all = raw;
    all.insert(all.end(), nn.begin(), nn.end());
    const EvaluationReport report = evaluate(all, test);

    stage = "write";
    if (!config.out_dir.empty()) {
      fs::create_directories(config.out_dir);
      auto emit = [&](const fs::path& name, auto&& writer) {
        const fs::path p = config.out_dir / name;
        written.push_back(p);
        writer(p);
      };
      emit("report.json", [&](const fs::path& p) { save_report(report, p); });
      emit("hist.csv", [&](const fs::path& p) { save_hist_csv(report, p); });
      emit("history.csv", [&](const fs::path& p) { save_history(history, p); });
      emit("weights.json", [&](const fs::path& p) {
        save_weights(params, p,
                     Json{{"eta", config.train.eta},
                          {"alpha", config.train.alpha},
                          {"batch_size", config.train.batch_size},
                          {"patience_epochs", config.train.patience_epochs},
                          {"max_epochs", config.train.max_epochs},
                          {"seed", config.train.seed},
                          {"scenario", config.scenario}});
      });
      emit("estimates_raw.jsonl", [&](const fs::path& p) { save_estimates(raw, p); });
      emit("estimates_nn.jsonl", [&](const fs::path& p) { save_estimates(nn, p); });
    }
    return report;
  } catch (const IoError& e) {
    cleanup();
    throw IoError("pipeline stage '" + stage + "': " + e.what());
  } catch (const NumericalError& e) {
    cleanup();
    throw NumericalError("pipeline stage '" + stage + "': " + e.what());
  } catch (const std::exception& e) {
    cleanup();
    throw ValidationError("pipeline stage '" + stage + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// learning curve

struct CurveRow {
  double fraction = 0.0;
  double mean_kl = 0.0;
  double mean_bhattacharyya = 0.0;
};

namespace detail {

// Fixed-epoch training used by the learning-curve protocol: no validation,
// no early stopping, final weights returned.
inline NetworkParams train_fixed_epochs(const RealMatrix& x, const RealMatrix& y, int epochs,
                                        int batch_size, double eta, double alpha, Rng& rng) {
  const int dim = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  NetworkParams params = NetworkParams::init(dim, rng());
  OptimizerState opt = OptimizerState::like(params, eta, alpha);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  BatchTrace trace;
  Gradients grads = Gradients::like(params);
  RealMatrix xb, yb;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += batch_size) {
      const int b = std::min(batch_size, n - start);
      xb.resize(dim, b);
      yb.resize(dim, b);
      for (int j = 0; j < b; ++j) {
        xb.col(j) = x.col(order[static_cast<std::size_t>(start + j)]);
        yb.col(j) = y.col(order[static_cast<std::size_t>(start + j)]);
      }
      const RealMatrix mask = make_dropout_mask(
          static_cast<int>(params.layers[0].w.rows()), b, params.dropout_p, rng);
      forward_train_into(params, xb, mask, trace);
      backward_into(params, trace, yb, grads);
      rmsprop_step(params, grads, opt);
    }
  }
  return params;
}

}  // namespace detail

/// Appendix-style data-budget sweep: for each fraction, sample that share of
/// the non-test pool, train for a fixed epoch budget, evaluate mean KL and
/// mean Bhattacharyya on the held-out test records, and average over repeats.
inline std::vector<CurveRow> learning_curve(const Dataset& dataset,
                                            const std::vector<double>& fractions, int repeats,
                                            int epochs, const TrainConfig& base) {
  if (repeats < 1) throw ValidationError("learning_curve: repeats must be >= 1");
  if (epochs < 1) throw ValidationError("learning_curve: epochs must be >= 1");
  const int n_test = base.split[2];
  if (n_test < 1 || static_cast<std::size_t>(n_test) >= dataset.size())
    throw ValidationError("learning_curve: invalid test split");
  const int pool = static_cast<int>(dataset.size()) - n_test;

  const RealMatrix x_pool = detail::columns_from(dataset, 0, static_cast<std::size_t>(pool), false);
  const RealMatrix y_pool = detail::columns_from(dataset, 0, static_cast<std::size_t>(pool), true);
  const RealMatrix x_test = detail::columns_from(dataset, static_cast<std::size_t>(pool),
                                                 dataset.size(), false);
  const RealMatrix y_test = detail::columns_from(dataset, static_cast<std::size_t>(pool),
                                                 dataset.size(), true);

  std::vector<CurveRow> rows;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const double fraction = fractions[fi];
    if (fraction <= 0.0 || fraction > 1.0)
      throw ValidationError("learning_curve: fractions must lie in (0, 1]");
    const int n = static_cast<int>(std::llround(fraction * pool));
    if (n < base.batch_size)
      throw ValidationError("learning_curve: insufficient-data, fraction " +
                            std::to_string(fraction) + " yields less than one batch");

    double kl_acc = 0.0, bh_acc = 0.0;
    for (int r = 0; r < repeats; ++r) {
      Rng rng(derive_seed(base.seed, stream::curve_cell,
                          fi * 1000 + static_cast<std::uint64_t>(r)));
      std::vector<int> idx(static_cast<std::size_t>(pool));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);

      RealMatrix xs(x_pool.rows(), n), ys(y_pool.rows(), n);
      for (int j = 0; j < n; ++j) {
        xs.col(j) = x_pool.col(idx[static_cast<std::size_t>(j)]);
        ys.col(j) = y_pool.col(idx[static_cast<std::size_t>(j)]);
      }
      const NetworkParams params = detail::train_fixed_epochs(
          xs, ys, epochs, base.batch_size, base.eta, base.alpha, rng);

      const RealMatrix logp = forward_infer_batch(params, x_test);
      kl_acc += mean_batch_kl(logp, y_test);
      double bh = 0.0;
      for (int c = 0; c < logp.cols(); ++c)
        bh += (logp.col(c).array().exp() * y_test.col(c).array()).sqrt().sum();
      bh_acc += bh / logp.cols();
    }
    rows.push_back({fraction, kl_acc / repeats, bh_acc / repeats});
  }
  return rows;
}

inline void save_curve_csv(const std::vector<CurveRow>& rows,
                           const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << "fraction,mean_kl,mean_bhattacharyya\n";
  for (const auto& row : rows)
    out << detail::fmt_double(row.fraction) << ',' << detail::fmt_double(row.mean_kl) << ','
        << detail::fmt_double(row.mean_bhattacharyya) << '\n';
}

}  // namespace qtomo
