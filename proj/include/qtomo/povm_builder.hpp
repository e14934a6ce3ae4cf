#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "qtomo/quantum_core.hpp"

namespace qtomo {

struct SicSearchConfig {
  int dim = 6;
  int max_iterations = 50000;
  double tolerance = 1e-7;  // target max |<phi_i|phi_j>|^2 deviation from 1/(d+1)
  std::uint64_t seed = 1;
  int restarts = 10;
};

struct SicBuildReport {
  double best_deviation = 0.0;
  int winner_restart = -1;
  int iterations_used = 0;
  double initial_frame_potential = 0.0;
  double final_frame_potential = 0.0;
};

struct IcReport {
  int rank = 0;
  bool is_ic = false;
  double completeness_residual = 0.0;
};

namespace detail {

// Frame potential excess sum_{i != j} (|<phi_i|phi_j>|^2 - 1/(d+1))^2 of unit columns.
inline double frame_potential_excess(const ComplexMatrix& vectors) {
  const int d = static_cast<int>(vectors.rows());
  const int n = static_cast<int>(vectors.cols());
  const double c = 1.0 / (d + 1.0);
  const ComplexMatrix gram = vectors.adjoint() * vectors;
  double fp = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dev = std::norm(gram(i, j)) - c;
      fp += dev * dev;
    }
  return fp;
}

inline double max_overlap_deviation(const ComplexMatrix& gram, double c) {
  const int n = static_cast<int>(gram.rows());
  double dev = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double s = std::norm(gram(i, j)) / (gram(i, i).real() * gram(j, j).real());
      dev = std::max(dev, std::abs(s - c));
    }
  return dev;
}

// Factor a rank-d PSD Gram matrix into d x n unit columns.
inline ComplexMatrix gram_to_vectors(const ComplexMatrix& gram, int d) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gram);
  const int n = static_cast<int>(gram.rows());
  ComplexMatrix v(d, n);
  for (int k = 0; k < d; ++k) {
    const int idx = n - 1 - k;  // eigenvalues ascend
    const double lam = std::max(es.eigenvalues()[idx], 0.0);
    v.row(k) = std::sqrt(lam) * es.eigenvectors().col(idx).adjoint();
  }
  for (int j = 0; j < n; ++j) v.col(j) /= v.col(j).norm();
  return v;
}

inline ComplexMatrix random_unit_columns(int d, int n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix v(d, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) v(i, j) = Complex(gauss(rng), gauss(rng));
    v.col(j) /= v.col(j).norm();
  }
  return v;
}

struct SicRestartResult {
  ComplexMatrix vectors;  // d x d^2 unit columns
  double deviation = 1.0;
  int iterations = 0;
};

// One restart of alternating projections on the Gram matrix: alternate between
// the SIC overlap structure (unit diagonal, off-diagonal magnitude 1/sqrt(d+1),
// phases kept) and the set of Gram matrices of tight rank-d frames (d times a
// rank-d projector). Aborts early when the deviation stops shrinking.
inline SicRestartResult sic_restart(int d, int max_iterations, double tolerance, Rng& rng) {
  const int n = d * d;
  const double c = 1.0 / (d + 1.0);
  const double off_mag = std::sqrt(c);

  ComplexMatrix v = random_unit_columns(d, n, rng);
  ComplexMatrix gram = v.adjoint() * v;

  SicRestartResult best;
  best.vectors = v;
  best.deviation = max_overlap_deviation(gram, c);

  constexpr int kStallWindow = 250;
  double window_start_dev = best.deviation;

  for (int it = 1; it <= max_iterations; ++it) {
    // structure projection
    ComplexMatrix target(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) {
          target(i, j) = 1.0;
        } else {
          const double mag = std::abs(gram(i, j));
          target(i, j) = mag > 0.0 ? off_mag * gram(i, j) / mag : Complex(off_mag, 0.0);
        }
      }
    }
    // spectral projection onto d * (rank-d projector)
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(target);
    const ComplexMatrix& u = es.eigenvectors();
    gram = static_cast<double>(d) * u.rightCols(d) * u.rightCols(d).adjoint();

    const double dev = max_overlap_deviation(gram, c);
    if (dev < best.deviation) {
      best.deviation = dev;
      best.vectors = gram_to_vectors(gram, d);
      best.iterations = it;
    }
    if (dev < tolerance) {
      best.iterations = it;
      break;
    }
    if (it % kStallWindow == 0) {
      if (dev > 0.9 * window_start_dev) break;  // stalled
      window_start_dev = dev;
    }
  }
  return best;
}

// Canonical tight-frame correction: rescale vectors so the rank-one elements
// sum to the identity exactly (up to round-off). Columns stay unit norm up to
// O(overlap deviation).
inline ComplexMatrix tighten_frame(const ComplexMatrix& vectors, int d) {
  const ComplexMatrix t = vectors * vectors.adjoint();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(t);
  const RealVector inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const ComplexMatrix t_m12 =
      es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
  return std::sqrt(static_cast<double>(d)) * t_m12 * vectors;
}

}  // namespace detail

/// Numerical SIC-POVM search: multi-start alternating projections driving the
/// pairwise overlaps |<phi_i|phi_j>|^2 to 1/(d+1), followed by a tight-frame
/// correction that makes sum_gamma M_gamma = I exact. Deterministic given
/// (seed, config); the winner is the restart with the smallest deviation,
/// ties broken by the lowest restart index.
inline Povm build_sic(const SicSearchConfig& config, SicBuildReport* report = nullptr) {
  if (config.dim < 2) throw ValidationError("build_sic: dim must be >= 2");
  if (config.tolerance <= 0.0) throw ValidationError("build_sic: tolerance must be positive");
  if (config.restarts < 1) throw ValidationError("build_sic: restarts must be >= 1");

  const int d = config.dim;
  const double c = 1.0 / (d + 1.0);

  detail::SicRestartResult best;
  int winner = -1;
  int total_iterations = 0;
  double initial_fp = 0.0;
  for (int r = 0; r < config.restarts; ++r) {
    Rng rng(derive_seed(config.seed, stream::sic_restart, static_cast<std::uint64_t>(r)));
    Rng rng_init_copy = rng;
    auto result = detail::sic_restart(d, config.max_iterations, config.tolerance, rng);
    total_iterations += result.iterations;
    if (winner < 0 || result.deviation < best.deviation) {
      best = std::move(result);
      winner = r;
      initial_fp = detail::frame_potential_excess(detail::random_unit_columns(d, d * d, rng_init_copy));
    }
  }

  if (best.deviation > config.tolerance)
    throw NumericalError("build_sic: sic-not-converged, best overlap deviation " +
                         std::to_string(best.deviation) + " exceeds tolerance after " +
                         std::to_string(config.restarts) + " restarts");

  const ComplexMatrix vectors = detail::tighten_frame(best.vectors, d);
  std::vector<ComplexMatrix> elements;
  elements.reserve(static_cast<std::size_t>(d) * d);
  for (int j = 0; j < d * d; ++j) {
    const ComplexVector phi = vectors.col(j);
    elements.push_back((phi * phi.adjoint()) / static_cast<double>(d));
  }

  if (report) {
    ComplexMatrix unit = vectors;
    for (int j = 0; j < unit.cols(); ++j) unit.col(j) /= unit.col(j).norm();
    report->best_deviation = detail::max_overlap_deviation(unit.adjoint() * unit, c);
    report->winner_restart = winner;
    report->iterations_used = total_iterations;
    report->initial_frame_potential = initial_fp;
    report->final_frame_potential = detail::frame_potential_excess(unit);
  }
  return Povm(d, std::move(elements));
}

/// Unit-norm directions of the rank-one POVM elements (dominant eigenvectors).
inline std::vector<PureState> sic_states(const Povm& povm) {
  std::vector<PureState> states;
  states.reserve(povm.size());
  for (const auto& e : povm.elements()) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(e);
    ComplexVector v = es.eigenvectors().col(povm.dim() - 1);
    // fix global phase: first entry of largest magnitude made real positive
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    v *= std::polar(1.0, -std::arg(v[imax]));
    states.emplace_back(v / v.norm());
  }
  return states;
}

/// Informational completeness: rank of the real span of the elements in the
/// d^2-dimensional space of Hermitian operators, via singular values with a
/// relative threshold of 1e-8. The element-list overload also serves
/// incomplete families that would not pass the Povm invariants.
inline IcReport verify_ic(int dim, const std::vector<ComplexMatrix>& elements) {
  const int d = dim;
  const int k = static_cast<int>(elements.size());
  if (k == 0) throw ValidationError("verify_ic: no elements");
  // isometric real coordinates: diagonal; sqrt(2) Re / Im of the upper triangle
  RealMatrix coords(k, d * d);
  const double rt2 = std::sqrt(2.0);
  for (int e = 0; e < k; ++e) {
    const ComplexMatrix& m = elements[static_cast<std::size_t>(e)];
    if (m.rows() != d || m.cols() != d) throw ValidationError("verify_ic: shape mismatch");
    int col = 0;
    for (int i = 0; i < d; ++i) coords(e, col++) = m(i, i).real();
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        coords(e, col++) = rt2 * m(i, j).real();
        coords(e, col++) = rt2 * m(i, j).imag();
      }
  }
  Eigen::JacobiSVD<RealMatrix> svd(coords);
  const RealVector& sv = svd.singularValues();
  const double cutoff = 1e-8 * sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;

  ComplexMatrix sum = ComplexMatrix::Zero(d, d);
  for (const auto& m : elements) sum += m;
  IcReport report;
  report.rank = rank;
  report.is_ic = (rank == d * d);
  report.completeness_residual = max_abs(sum - ComplexMatrix::Identity(d, d));
  return report;
}

inline IcReport verify_ic(const Povm& povm) { return verify_ic(povm.dim(), povm.elements()); }

}  // namespace qtomo
