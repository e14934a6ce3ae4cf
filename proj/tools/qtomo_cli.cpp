// Command-line front end: dataset synthesis, SIC construction, denoiser
// training, MLE reconstruction, process tomography and report generation.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "qtomo/experiments.hpp"
#include "qtomo/io.hpp"

namespace fs = std::filesystem;
using namespace qtomo;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

Povm resolve_povm(const std::string& povm_path, int dim, std::uint64_t sic_seed = 1) {
  if (!povm_path.empty()) return load_povm(povm_path);
  SicSearchConfig config;
  config.dim = dim;
  config.seed = sic_seed;
  return build_sic(config);
}

SpamKind parse_spam(const std::string& name) {
  if (name == "clean" || name == "none") return SpamKind::none;
  if (name == "gouy") return SpamKind::gouy;
  if (name == "smf") return SpamKind::smf;
  if (name == "gouy+smf" || name == "agnostic") return SpamKind::both;
  throw ValidationError("unknown --spam value '" + name + "'");
}

std::array<int, 3> parse_split(const std::string& text) {
  std::array<int, 3> split{};
  if (std::sscanf(text.c_str(), "%d,%d,%d", &split[0], &split[1], &split[2]) != 3)
    throw ValidationError("--split expects three comma-separated counts");
  return split;
}

std::vector<double> parse_fractions(const std::string& text) {
  double start = 0.0, end = 0.0, step = 0.0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &end, &step) != 3 || step <= 0.0)
    throw ValidationError("--fractions expects start:end:step");
  std::vector<double> fractions;
  const int n = static_cast<int>(std::llround((end - start) / step));
  for (int i = 0; i <= n; ++i) fractions.push_back(start + i * step);
  return fractions;
}

KrausChannel parse_channel(const std::string& text) {
  if (text == "identity") return gouy_channel(0.0, 0.0);
  double phi1 = 0.0, phi2 = 0.0;
  if (std::sscanf(text.c_str(), "gouy:%lf,%lf", &phi1, &phi2) != 2)
    throw ValidationError("--channel expects 'gouy:PHI1,PHI2' or 'identity'");
  return gouy_channel(phi1, phi2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-grounded neural-network-enhanced qudit state tomography"};
  app.require_subcommand(1);

  // ---- build-povm
  auto* cmd_povm = app.add_subcommand("build-povm", "Construct a SIC POVM numerically");
  int bp_dim = 6;
  std::string bp_kind = "sic", bp_out;
  std::uint64_t bp_seed = 1;
  int bp_maxit = 50000, bp_restarts = 10;
  double bp_tol = 1e-7;
  cmd_povm->add_option("--dim", bp_dim);
  cmd_povm->add_option("--kind", bp_kind)->check(CLI::IsMember({"sic"}));
  cmd_povm->add_option("--seed", bp_seed);
  cmd_povm->add_option("--out", bp_out)->required();
  cmd_povm->add_option("--max-iterations", bp_maxit);
  cmd_povm->add_option("--tolerance", bp_tol);
  cmd_povm->add_option("--restarts", bp_restarts);

  // ---- gen-dataset
  auto* cmd_gen = app.add_subcommand("gen-dataset", "Synthesize a SPAM-corrupted dataset");
  int gd_dim = 6, gd_states = 10500;
  long long gd_shots = 10000;
  std::string gd_spam = "clean", gd_out, gd_povm;
  std::uint64_t gd_seed = 0;
  SpamParams gd_params;
  cmd_gen->add_option("--dim", gd_dim);
  cmd_gen->add_option("--states", gd_states);
  cmd_gen->add_option("--shots", gd_shots)->description("0 = exact frequencies");
  cmd_gen->add_option("--spam", gd_spam)
      ->check(CLI::IsMember({"clean", "gouy", "smf", "gouy+smf", "agnostic"}));
  cmd_gen->add_option("--seed", gd_seed);
  cmd_gen->add_option("--out", gd_out)->required();
  cmd_gen->add_option("--povm", gd_povm);
  cmd_gen->add_option("--phi1", gd_params.phi1);
  cmd_gen->add_option("--phi2", gd_params.phi2);
  cmd_gen->add_option("--w", gd_params.w);
  cmd_gen->add_option("--wf", gd_params.w_f);

  // ---- train
  auto* cmd_train = app.add_subcommand("train", "Train the denoising network");
  std::string tr_data, tr_povm, tr_split = "7000,1500,2000", tr_out, tr_history;
  TrainConfig tr_config;
  cmd_train->add_option("--data", tr_data)->required();
  cmd_train->add_option("--povm", tr_povm);
  cmd_train->add_option("--split", tr_split);
  cmd_train->add_option("--eta", tr_config.eta);
  cmd_train->add_option("--alpha", tr_config.alpha);
  cmd_train->add_option("--seed", tr_config.seed);
  cmd_train->add_option("--out", tr_out)->required();
  cmd_train->add_option("--history", tr_history);
  cmd_train->add_option("--batch", tr_config.batch_size);
  cmd_train->add_option("--patience", tr_config.patience_epochs);
  cmd_train->add_option("--max-epochs", tr_config.max_epochs);

  // ---- reconstruct
  auto* cmd_rec = app.add_subcommand("reconstruct", "Maximum-likelihood state reconstruction");
  std::string rc_data, rc_povm, rc_weights, rc_out;
  bool rc_pure = false;
  MleConfig rc_mle;
  cmd_rec->add_option("--data", rc_data)->required();
  cmd_rec->add_option("--povm", rc_povm);
  cmd_rec->add_option("--denoise", rc_weights);
  cmd_rec->add_flag("--pure", rc_pure);
  cmd_rec->add_option("--out", rc_out)->required();
  cmd_rec->add_option("--max-iterations", rc_mle.max_iterations);
  cmd_rec->add_option("--tol", rc_mle.convergence_tol);

  // ---- evaluate
  auto* cmd_eval = app.add_subcommand("evaluate", "Fidelity/purity metrics against the truth");
  std::vector<std::string> ev_estimates;
  std::string ev_truth, ev_out, ev_hist;
  cmd_eval->add_option("--estimates", ev_estimates)->required();
  cmd_eval->add_option("--truth", ev_truth)->required();
  cmd_eval->add_option("--out", ev_out)->required();
  cmd_eval->add_option("--hist", ev_hist);

  // ---- process-tomo
  auto* cmd_proc = app.add_subcommand("process-tomo", "Channel reconstruction and Gouy readout");
  std::string pt_channel = "gouy:0.92,1.97", pt_out, pt_povm;
  long long pt_shots = 0;
  std::uint64_t pt_seed = 0;
  cmd_proc->add_option("--channel", pt_channel);
  cmd_proc->add_option("--shots", pt_shots)->description("0 = exact mode");
  cmd_proc->add_option("--seed", pt_seed);
  cmd_proc->add_option("--povm", pt_povm);
  cmd_proc->add_option("--out", pt_out)->required();

  // ---- learning-curve
  auto* cmd_curve = app.add_subcommand("learning-curve", "Data-budget sweep");
  std::string lc_data, lc_fractions = "0.1:1.0:0.1", lc_out;
  int lc_repeats = 5, lc_epochs = 200, lc_test = 2000;
  TrainConfig lc_config;
  cmd_curve->add_option("--data", lc_data)->required();
  cmd_curve->add_option("--fractions", lc_fractions);
  cmd_curve->add_option("--repeats", lc_repeats);
  cmd_curve->add_option("--epochs", lc_epochs);
  cmd_curve->add_option("--test", lc_test);
  cmd_curve->add_option("--eta", lc_config.eta);
  cmd_curve->add_option("--alpha", lc_config.alpha);
  cmd_curve->add_option("--batch", lc_config.batch_size);
  cmd_curve->add_option("--seed", lc_config.seed);
  cmd_curve->add_option("--out", lc_out)->required();

  // ---- pipeline
  auto* cmd_pipe = app.add_subcommand("pipeline", "End-to-end scenario run");
  std::string pl_scenario = "gouy", pl_out_dir, pl_split = "7000,1500,2000", pl_povm;
  PipelineConfig pl_config;
  cmd_pipe->add_option("--scenario", pl_scenario)
      ->check(CLI::IsMember({"clean", "gouy", "gouy+smf", "agnostic"}));
  cmd_pipe->add_option("--out-dir", pl_out_dir)->required();
  cmd_pipe->add_option("--seed", pl_config.master_seed);
  cmd_pipe->add_option("--states", pl_config.dataset.n_states);
  cmd_pipe->add_option("--shots", pl_config.dataset.shots);
  cmd_pipe->add_option("--split", pl_split);
  cmd_pipe->add_option("--eta", pl_config.train.eta);
  cmd_pipe->add_option("--alpha", pl_config.train.alpha);
  cmd_pipe->add_option("--batch", pl_config.train.batch_size);
  cmd_pipe->add_option("--patience", pl_config.train.patience_epochs);
  cmd_pipe->add_option("--max-epochs", pl_config.train.max_epochs);
  cmd_pipe->add_option("--povm", pl_povm);
  cmd_pipe->add_option("--mle-iterations", pl_config.mle.max_iterations);

  // ---- crosstalk
  auto* cmd_xt = app.add_subcommand("crosstalk", "Export cross-talk probabilities as CSV");
  std::string xt_spam = "gouy", xt_out, xt_povm;
  SpamParams xt_params;
  cmd_xt->add_option("--spam", xt_spam)
      ->check(CLI::IsMember({"clean", "gouy", "smf", "gouy+smf", "agnostic"}));
  cmd_xt->add_option("--out", xt_out)->required();
  cmd_xt->add_option("--povm", xt_povm);
  cmd_xt->add_option("--phi1", xt_params.phi1);
  cmd_xt->add_option("--phi2", xt_params.phi2);
  cmd_xt->add_option("--w", xt_params.w);
  cmd_xt->add_option("--wf", xt_params.w_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_povm) {
      SicSearchConfig config;
      config.dim = bp_dim;
      config.max_iterations = bp_maxit;
      config.tolerance = bp_tol;
      config.seed = bp_seed;
      config.restarts = bp_restarts;
      SicBuildReport report;
      const Povm povm = build_sic(config, &report);
      save_povm(povm, bp_out, bp_kind);
      std::cout << "wrote " << bp_out << " (deviation " << report.best_deviation
                << ", restart " << report.winner_restart << ")\n";
    } else if (*cmd_gen) {
      DatasetConfig config;
      config.dim = gd_dim;
      config.n_states = gd_states;
      config.shots = gd_shots;
      config.spam = parse_spam(gd_spam);
      config.spam_params = gd_params;
      config.seed = gd_seed;
      const Povm povm = resolve_povm(gd_povm, gd_dim);
      save_dataset(generate_dataset(config, povm), gd_out);
      std::cout << "wrote " << gd_out << " (" << gd_states << " records)\n";
    } else if (*cmd_train) {
      tr_config.split = parse_split(tr_split);
      const Dataset dataset = load_dataset(tr_data);
      if (!tr_povm.empty()) {
        const Povm povm = load_povm(tr_povm);
        if (!dataset.empty() &&
            dataset.front().ideal_probs.size() != static_cast<int>(povm.size()))
          throw ValidationError("train: dataset outcome count does not match the POVM");
      }
      auto [params, history] = train(dataset, tr_config);
      save_weights(params, tr_out,
                   Json{{"eta", tr_config.eta},
                        {"alpha", tr_config.alpha},
                        {"batch_size", tr_config.batch_size},
                        {"patience_epochs", tr_config.patience_epochs},
                        {"max_epochs", tr_config.max_epochs},
                        {"split", tr_config.split},
                        {"seed", tr_config.seed}});
      if (!tr_history.empty()) save_history(history, tr_history);
      std::cout << "stopped at epoch " << history.stopped_epoch << ", best epoch "
                << history.best_epoch << ", best val loss " << history.best_val_loss
                << (history.hit_max_epochs ? " (hit max epochs)" : "") << "\n";
    } else if (*cmd_rec) {
      const Dataset dataset = load_dataset(rc_data);
      const Povm povm = resolve_povm(rc_povm, dataset.empty() ? 6 : static_cast<int>(
          std::lround(std::sqrt(static_cast<double>(dataset.front().ideal_probs.size())))));
      ReconstructOptions options;
      options.mle = rc_mle;
      options.pure = rc_pure;
      NetworkParams params;
      if (!rc_weights.empty()) {
        params = load_weights(rc_weights);
        options.denoiser = &params;
      }
      save_estimates(reconstruct_records(dataset, povm, options), rc_out);
      std::cout << "wrote " << rc_out << " (" << dataset.size() << " estimates)\n";
    } else if (*cmd_eval) {
      std::vector<EstimateRecord> estimates;
      for (const auto& path : ev_estimates) {
        auto part = load_estimates(path);
        estimates.insert(estimates.end(), part.begin(), part.end());
      }
      const EvaluationReport report = evaluate(estimates, load_dataset(ev_truth));
      save_report(report, ev_out);
      if (!ev_hist.empty()) save_hist_csv(report, ev_hist);
      for (const auto& [name, s] : report.aggregates)
        std::cout << name << ": " << s.mean << " +- " << s.stddev << "\n";
    } else if (*cmd_proc) {
      const KrausChannel channel = parse_channel(pt_channel);
      const Povm povm = resolve_povm(pt_povm, channel.dim());
      const std::vector<PureState> probes = sic_states(povm);
      const ProcessDataset data =
          simulate_process_data(channel, povm, probes, pt_shots, pt_seed);
      const ChiMatrix chi = reconstruct_process(data);
      bool degenerate = false;
      const ComplexMatrix e1 = dominant_kraus(chi, &degenerate);
      const GouyEstimate gouy = extract_gouy_phases(e1);
      save_chi(chi, e1, gouy, pt_out);
      std::cout << "phi1 = " << gouy.phi1 << ", phi2 = " << gouy.phi2
                << (degenerate ? " (degenerate top eigenvalue)" : "") << "\n";
    } else if (*cmd_curve) {
      lc_config.split = {0, 0, lc_test};
      const Dataset dataset = load_dataset(lc_data);
      const auto rows =
          learning_curve(dataset, parse_fractions(lc_fractions), lc_repeats, lc_epochs, lc_config);
      save_curve_csv(rows, lc_out);
      std::cout << "wrote " << lc_out << " (" << rows.size() << " rows)\n";
    } else if (*cmd_pipe) {
      pl_config.scenario = pl_scenario;
      pl_config.out_dir = pl_out_dir;
      pl_config.train.split = parse_split(pl_split);
      const Povm povm = resolve_povm(pl_povm, pl_config.dataset.dim);
      const EvaluationReport report = run_pipeline(pl_config, povm);
      for (const auto& [name, s] : report.aggregates)
        std::cout << name << ": " << s.mean << " +- " << s.stddev << "\n";
      std::cout << "outputs in " << pl_out_dir << "\n";
    } else if (*cmd_xt) {
      const Povm povm = resolve_povm(xt_povm, 6);
      const std::vector<PureState> probes = sic_states(povm);
      const auto elements = effective_povm_elements(povm, parse_spam(xt_spam), xt_params);
      const CrosstalkMatrix xt = crosstalk_matrix(probes, elements);
      save_crosstalk_csv(xt, povm.labels(), xt_out);
      const CrosstalkMatrix ideal = crosstalk_matrix(probes, povm);
      std::cout << "similarity vs ideal: " << similarity(xt, ideal) << "\n";
    }
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
