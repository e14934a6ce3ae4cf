#pragma once

#include <cassert>
#include <utility>
#include <vector>

#include "qtomo/quantum_core.hpp"

namespace qtomo {

struct MleConfig {
  int max_iterations = 5000;
  double convergence_tol = 1e-10;  // Frobenius norm of the iterate change
  bool enforce_pure = false;
};

struct ReconstructionResult {
  DensityMatrix rho_hat = DensityMatrix::maximally_mixed(2);
  double log_likelihood = 0.0;
  int iterations_used = 0;
  bool converged = false;
  bool degenerate_top = false;  // set by the pure-state variant on spectral ties
};

namespace detail {

inline constexpr double kProbFloor = 1e-12;

inline RealVector born_raw(const ComplexMatrix& rho, const Povm& povm) {
  RealVector p(static_cast<int>(povm.size()));
  for (std::size_t k = 0; k < povm.size(); ++k)
    p[static_cast<int>(k)] = real_trace_product(povm.elements()[k], rho);
  return p;
}

inline double log_likelihood_of(const RealVector& freqs, const RealVector& probs) {
  double ll = 0.0;
  for (int k = 0; k < freqs.size(); ++k)
    if (freqs[k] > 0.0) ll += freqs[k] * std::log(std::max(probs[k], kProbFloor));
  return ll;
}

}  // namespace detail

/// Maximum-likelihood density matrix from outcome frequencies by the RhoR
/// fixed-point iteration rho <- R rho R / Tr(R rho R) with
/// R = sum_gamma (f_gamma / Tr(M_gamma rho)) M_gamma, started at I/d.
///
/// The plain fixed point crawls with an O(1/iter) tail whenever the optimum
/// sits on a rank-deficient face of the state space (always the case for
/// noise-free pure-state data), so every 50 iterations the loop proposes
/// eigenvalue-truncated candidates and accepts the first one that does not
/// lower the log-likelihood. Accepted iterates keep the likelihood
/// non-decreasing and remain valid states throughout.
inline ReconstructionResult mle_density(const RealVector& freqs, const Povm& povm,
                                        const MleConfig& config = {},
                                        std::vector<double>* ll_trace = nullptr) {
  const int d = povm.dim();
  if (freqs.size() != static_cast<int>(povm.size()))
    throw ValidationError("mle_density: frequency vector length does not match POVM");
  if (freqs.minCoeff() < 0.0) throw ValidationError("mle_density: negative frequency");
  const double fsum = freqs.sum();
  if (std::abs(fsum - 1.0) > 1e-6)
    throw ValidationError("mle_density: frequencies must sum to 1 within 1e-6");
  if (config.convergence_tol <= 0.0)
    throw ValidationError("mle_density: convergence_tol must be positive");
  const RealVector f = freqs / fsum;

  constexpr int kFacePeriod = 50;
  ComplexMatrix rho = ComplexMatrix::Identity(d, d) / static_cast<double>(d);
  double ll = detail::log_likelihood_of(f, detail::born_raw(rho, povm));
  if (ll_trace) ll_trace->push_back(ll);

  ReconstructionResult result;
  for (int it = 1; it <= config.max_iterations; ++it) {
    const RealVector probs = detail::born_raw(rho, povm);
    ComplexMatrix r = ComplexMatrix::Zero(d, d);
    for (std::size_t k = 0; k < povm.size(); ++k) {
      const int ki = static_cast<int>(k);
      if (f[ki] > 0.0)
        r += (f[ki] / std::max(probs[ki], detail::kProbFloor)) * povm.elements()[k];
    }
    ComplexMatrix next = r * rho * r;
    next = 0.5 * (next + next.adjoint()).eval();
    next /= next.trace().real();

    const double delta = (next - rho).norm();
    rho = std::move(next);
    ll = detail::log_likelihood_of(f, detail::born_raw(rho, povm));
    if (ll_trace) ll_trace->push_back(ll);
#ifndef NDEBUG
    assert(hermiticity_deviation(rho) <= 1e-9);
    assert(std::abs(rho.trace().real() - 1.0) <= 1e-9);
#endif

    if (it % kFacePeriod == 0) {
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho);
      for (int rank = 1; rank < d; ++rank) {
        RealVector ev = es.eigenvalues().cwiseMax(0.0);
        for (int z = 0; z < d - rank; ++z) ev[z] = 0.0;  // ascending order
        const double total = ev.sum();
        if (total <= 0.0) continue;
        ComplexMatrix cand =
            es.eigenvectors() * (ev / total).asDiagonal() * es.eigenvectors().adjoint();
        const double cll = detail::log_likelihood_of(f, detail::born_raw(cand, povm));
        if (cll >= ll) {
          rho = std::move(cand);
          ll = cll;
          if (ll_trace) ll_trace->push_back(ll);
          break;
        }
      }
    }

    if (delta < config.convergence_tol) {
      result.converged = true;
      result.iterations_used = it;
      break;
    }
    result.iterations_used = it;
  }

  result.rho_hat = DensityMatrix(rho);
  result.log_likelihood = detail::log_likelihood_of(
      f, detail::born_raw(result.rho_hat.matrix(), povm));
  return result;
}

/// Eigenvector of the largest eigenvalue; the flag reports a spectral gap
/// below 1e-10 (ties broken deterministically by the eigensolver ordering).
inline std::pair<PureState, bool> dominant_eigenvector(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
  const int d = rho.dim();
  const RealVector& ev = es.eigenvalues();
  ComplexVector top = es.eigenvectors().col(d - 1);
  top /= top.norm();
  const bool degenerate = (d >= 2) && (ev[d - 1] - ev[d - 2] < 1e-10);
  return {PureState(std::move(top)), degenerate};
}

/// Pure-state estimate: dominant eigenvector of the mixed MLE. The returned
/// result carries the likelihood of the rank-one projector.
inline std::pair<PureState, ReconstructionResult> mle_pure(const RealVector& freqs,
                                                           const Povm& povm,
                                                           const MleConfig& config = {}) {
  ReconstructionResult mixed = mle_density(freqs, povm, config);
  auto [psi, degenerate] = dominant_eigenvector(mixed.rho_hat);

  ReconstructionResult result = mixed;
  result.degenerate_top = degenerate;
  result.rho_hat = DensityMatrix::from_pure(psi);
  result.log_likelihood = detail::log_likelihood_of(
      freqs / freqs.sum(), detail::born_raw(result.rho_hat.matrix(), povm));
  return {std::move(psi), std::move(result)};
}

}  // namespace qtomo
