#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "qtomo/povm_builder.hpp"
#include "qtomo/quantum_core.hpp"
#include "qtomo/sampler.hpp"

namespace qtomo {

/// Process matrix chi over the matrix-unit operator basis B_{a*d+b} = |a><b|
/// (canonical row-major ordering): E(rho) = sum_{mn} chi_mn B_m rho B_n^dag.
struct ChiMatrix {
  int dim = 0;
  ComplexMatrix chi;
  double data_residual = 0.0;   // rms misfit of the projected chi to the data
  bool model_mismatch = false;  // residual above 0.1
};

/// Probe states measured under a POVM: observed(gamma, alpha) is the outcome
/// probability (or frequency) of outcome gamma for probe alpha.
struct ProcessDataset {
  std::vector<PureState> probes;
  Povm povm;
  RealMatrix observed;
};

struct GouyEstimate {
  double phi1 = 0.0;
  double phi2 = 0.0;
  std::vector<double> per_mode;
};

namespace detail {

// P(gamma|alpha) = sum_mn chi_mn rho_alpha(b, b') M_gamma(a', a) for
// m = a*d + b, n = a'*d + b'.
inline ComplexMatrix process_design_matrix(const ProcessDataset& data) {
  const int d = data.povm.dim();
  const int d2 = d * d;
  const int n_probe = static_cast<int>(data.probes.size());
  const int n_out = static_cast<int>(data.povm.size());
  ComplexMatrix design(n_probe * n_out, d2 * d2);
  for (int alpha = 0; alpha < n_probe; ++alpha) {
    const ComplexMatrix rho = data.probes[static_cast<std::size_t>(alpha)].projector();
    for (int gamma = 0; gamma < n_out; ++gamma) {
      const ComplexMatrix& mg = data.povm.elements()[static_cast<std::size_t>(gamma)];
      const int row = alpha * n_out + gamma;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          for (int ap = 0; ap < d; ++ap)
            for (int bp = 0; bp < d; ++bp)
              design(row, (a * d + b) * d2 + (ap * d + bp)) = rho(b, bp) * mg(ap, a);
    }
  }
  return design;
}

// Trace-preservation witness T(b', b) = sum_a chi((a,b), (a,b')); equals the
// identity for a TP map.
inline ComplexMatrix tp_witness(const ComplexMatrix& chi, int d) {
  ComplexMatrix t = ComplexMatrix::Zero(d, d);
  for (int b = 0; b < d; ++b)
    for (int bp = 0; bp < d; ++bp) {
      Complex acc = 0.0;
      for (int a = 0; a < d; ++a) acc += chi(a * d + b, a * d + bp);
      t(bp, b) = acc;
    }
  return t;
}

inline double wrap_angle(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  double y = std::remainder(x, two_pi);
  if (y <= -std::numbers::pi) y += two_pi;
  return y;
}

}  // namespace detail

/// Forward-simulate process-tomography data for a known channel: exact Born
/// probabilities when shots == 0, multinomial frequencies otherwise.
inline ProcessDataset simulate_process_data(const KrausChannel& channel, const Povm& povm,
                                            const std::vector<PureState>& probes,
                                            long long shots = 0, std::uint64_t seed = 0) {
  ProcessDataset data{probes, povm, RealMatrix(povm.size(), probes.size())};
  for (std::size_t alpha = 0; alpha < probes.size(); ++alpha) {
    const DensityMatrix out = apply_channel(channel, DensityMatrix::from_pure(probes[alpha]));
    const ProbDistribution p = born_probabilities(out, povm);
    if (shots == 0) {
      data.observed.col(static_cast<int>(alpha)) = p.values();
    } else {
      Rng rng(derive_seed(seed, stream::process_probe, alpha));
      const auto counts = sample_counts(p, shots, rng);
      for (std::size_t k = 0; k < counts.size(); ++k)
        data.observed(static_cast<int>(k), static_cast<int>(alpha)) =
            static_cast<double>(counts[k]) / static_cast<double>(shots);
    }
  }
  return data;
}

/// Linear least-squares inversion of the probe/outcome probabilities for chi,
/// followed by projection to the closest Hermitian PSD matrix and an exact
/// trace-preservation correction (Kraus right-multiplication by T^{-1/2}).
inline ChiMatrix reconstruct_process(const ProcessDataset& data) {
  const int d = data.povm.dim();
  const int d2 = d * d;
  if (data.observed.rows() != static_cast<int>(data.povm.size()) ||
      data.observed.cols() != static_cast<int>(data.probes.size()))
    throw ValidationError("reconstruct_process: observed matrix shape mismatch");
  for (const auto& probe : data.probes)
    if (probe.dim() != d) throw ValidationError("reconstruct_process: probe dimension mismatch");

  const ComplexMatrix design = detail::process_design_matrix(data);
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(design);
  qr.setThreshold(1e-8);
  if (qr.rank() < d2 * d2)
    throw ValidationError("reconstruct_process: probes-not-complete, design rank " +
                          std::to_string(qr.rank()) + " < " + std::to_string(d2 * d2));

  ComplexVector p(design.rows());
  for (int alpha = 0; alpha < data.observed.cols(); ++alpha)
    for (int gamma = 0; gamma < data.observed.rows(); ++gamma)
      p[alpha * data.observed.rows() + gamma] = Complex(data.observed(gamma, alpha), 0.0);
  const ComplexVector x = qr.solve(p);

  ComplexMatrix chi(d2, d2);
  for (int m = 0; m < d2; ++m)
    for (int n = 0; n < d2; ++n) chi(m, n) = x[m * d2 + n];
  chi = 0.5 * (chi + chi.adjoint()).eval();

  // CP projection: clip negative eigenvalues
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(chi);
  chi = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
        es.eigenvectors().adjoint();

  // TP correction: E_k -> E_k S with S = T^{-1/2}, i.e. chi -> K chi K^dag
  // with K = I kron S^T
  const ComplexMatrix t = detail::tp_witness(chi, d);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> ts(t);
  if (ts.eigenvalues().minCoeff() <= 1e-12)
    throw NumericalError("reconstruct_process: trace witness is singular");
  const ComplexMatrix s = ts.eigenvectors() *
                          ts.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          ts.eigenvectors().adjoint();
  ComplexMatrix k = ComplexMatrix::Zero(d2, d2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) k(a * d + b, a * d + c) = s(c, b);
  chi = (k * chi * k.adjoint()).eval();
  chi = 0.5 * (chi + chi.adjoint()).eval();

  ChiMatrix result;
  result.dim = d;
  result.chi = chi;
  ComplexVector xproj(d2 * d2);
  for (int m = 0; m < d2; ++m)
    for (int n = 0; n < d2; ++n) xproj[m * d2 + n] = chi(m, n);
  result.data_residual =
      std::sqrt((design * xproj - p).squaredNorm() / static_cast<double>(p.size()));
  result.model_mismatch = result.data_residual > 0.1;
  return result;
}

/// Dominant Kraus operator sqrt(lambda_1) * unvec(u_1), global phase fixed so
/// entry (0,0) is real non-negative. Sets *degenerate when the top spectral
/// gap is below 1e-10.
inline ComplexMatrix dominant_kraus(const ChiMatrix& chi, bool* degenerate = nullptr) {
  const int d = chi.dim;
  const int d2 = d * d;
  if (chi.chi.rows() != d2 || chi.chi.cols() != d2)
    throw ValidationError("dominant_kraus: chi matrix shape mismatch");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(chi.chi);
  const double lam = std::max(es.eigenvalues()[d2 - 1], 0.0);
  if (degenerate)
    *degenerate = d2 >= 2 && (es.eigenvalues()[d2 - 1] - es.eigenvalues()[d2 - 2] < 1e-10);
  const ComplexVector u = es.eigenvectors().col(d2 - 1);
  ComplexMatrix e1(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) e1(a, b) = std::sqrt(lam) * u[a * d + b];
  if (std::abs(e1(0, 0)) > 1e-12) e1 *= std::polar(1.0, -std::arg(e1(0, 0)));
  return e1;
}

/// Diagonal phases of E1 relative to the fundamental mode, averaged per mode
/// order with a circular mean: phi1 over indices {1,2}, phi2 over {3,4,5}.
inline GouyEstimate extract_gouy_phases(const ComplexMatrix& e1) {
  if (e1.rows() != 6 || e1.cols() != 6)
    throw ValidationError("extract_gouy_phases: expects the d = 6 canonical ordering");
  for (int k = 0; k < 6; ++k)
    if (std::abs(e1(k, k)) < 1e-6)
      throw NumericalError("extract_gouy_phases: phase-undefined, vanishing diagonal element");

  GouyEstimate est;
  const double ref = std::arg(e1(0, 0));
  est.per_mode.resize(6);
  for (int k = 0; k < 6; ++k)
    est.per_mode[static_cast<std::size_t>(k)] = detail::wrap_angle(std::arg(e1(k, k)) - ref);

  auto circular_mean = [&](std::initializer_list<int> idx) {
    double s = 0.0, c = 0.0;
    for (int k : idx) {
      s += std::sin(est.per_mode[static_cast<std::size_t>(k)]);
      c += std::cos(est.per_mode[static_cast<std::size_t>(k)]);
    }
    return std::atan2(s, c);
  };
  est.phi1 = circular_mean({1, 2});
  est.phi2 = circular_mean({3, 4, 5});
  return est;
}

}  // namespace qtomo
