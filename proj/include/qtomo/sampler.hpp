#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qtomo/optics_model.hpp"
#include "qtomo/quantum_core.hpp"

namespace qtomo {

/// One prepared state with its ideal outcome probabilities and the
/// SPAM-corrupted measurement record. shots == 0 marks exact mode (infinite
/// statistics): counts stay empty and noisy_freqs holds the corrupted
/// probabilities themselves.
struct TomographyRecord {
  int id = 0;
  std::optional<PureState> true_state;
  RealVector ideal_probs;
  RealVector noisy_freqs;
  std::vector<long long> counts;
  long long shots = 0;
};

using Dataset = std::vector<TomographyRecord>;

struct DatasetConfig {
  int dim = 6;
  int n_states = 10500;
  long long shots = 10000;  // 0 => exact frequencies
  SpamKind spam = SpamKind::none;
  SpamParams spam_params{};
  std::uint64_t seed = 0;
};

/// Multinomial draw by sequential conditional binomials.
inline std::vector<long long> sample_counts(const ProbDistribution& probs, long long shots,
                                            Rng& rng) {
  if (shots < 1) throw ValidationError("sample_counts: shots must be >= 1");
  const int k = probs.size();
  std::vector<long long> counts(static_cast<std::size_t>(k), 0);
  long long remaining = shots;
  double rest = 1.0;
  for (int i = 0; i < k - 1 && remaining > 0; ++i) {
    const double p = std::clamp(probs[i] / rest, 0.0, 1.0);
    std::binomial_distribution<long long> binom(remaining, p);
    const long long n = binom(rng);
    counts[static_cast<std::size_t>(i)] = n;
    remaining -= n;
    rest = std::max(rest - probs[i], 0.0);
  }
  counts[static_cast<std::size_t>(k - 1)] = remaining;
  return counts;
}

/// Haar-random states measured under the SPAM-corrupted effective POVM.
/// Records carry the clean ideal probabilities as targets. Each record draws
/// from its own child seed, so generation order never matters.
inline Dataset generate_dataset(const DatasetConfig& config, const Povm& povm) {
  if (config.n_states < 1) throw ValidationError("generate_dataset: n_states must be >= 1");
  if (config.shots < 0) throw ValidationError("generate_dataset: shots must be >= 0");
  if (povm.dim() != config.dim) throw ValidationError("generate_dataset: POVM dim mismatch");

  const std::vector<ComplexMatrix> effective =
      effective_povm_elements(povm, config.spam, config.spam_params);

  Dataset records;
  records.reserve(static_cast<std::size_t>(config.n_states));
  for (int i = 0; i < config.n_states; ++i) {
    Rng rng(derive_seed(config.seed, stream::dataset_record, static_cast<std::uint64_t>(i)));
    PureState psi = haar_random_pure(config.dim, rng);
    const DensityMatrix rho = DensityMatrix::from_pure(psi);

    TomographyRecord rec;
    rec.id = i;
    rec.ideal_probs = born_probabilities(rho, povm).values();
    const RealVector corrupted = corrupted_probabilities(rho, effective);
    if (config.shots == 0) {
      rec.noisy_freqs = corrupted;
      rec.shots = 0;
    } else {
      rec.counts = sample_counts(ProbDistribution(corrupted), config.shots, rng);
      rec.shots = config.shots;
      rec.noisy_freqs.resize(corrupted.size());
      for (int k = 0; k < corrupted.size(); ++k)
        rec.noisy_freqs[k] = static_cast<double>(rec.counts[static_cast<std::size_t>(k)]) /
                             static_cast<double>(config.shots);
    }
    rec.true_state = std::move(psi);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace qtomo
