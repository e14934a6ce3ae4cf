#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>

#include "qtomo/quantum_core.hpp"

namespace qtomo {

/// Hermite-Gaussian mode indices: n is the x-order, m the y-order.
struct HgModeIndex {
  int n = 0;
  int m = 0;
  int order() const { return n + m; }
};

/// Canonical basis ordering for the d = 6 mode space; Gouy phases group by
/// total order as {0}, {1,1}, {2,2,2}.
inline constexpr std::array<HgModeIndex, 6> canonical_modes() {
  return {{{0, 0}, {0, 1}, {1, 0}, {0, 2}, {1, 1}, {2, 0}}};
}

/// SPAM model for the detection side: preparation waist w, fiber-mode waist
/// w_f, whether the width compensation is applied, and the Gouy phases for
/// mode orders 1 and 2.
struct DetectionModel {
  double w = 1.0;
  double w_f = 2.0;
  bool corrected = false;
  double gouy_phi1 = 0.0;
  double gouy_phi2 = 0.0;
  int quadrature_nodes = 40;
};

/// Measured-vs-probe outcome probabilities, rows = outcomes, cols = probes.
struct CrosstalkMatrix {
  RealMatrix probs;
};

namespace detail {

struct GaussHermiteRule {
  RealVector nodes;
  RealVector weights;  // for integrals against exp(-x^2)
};

// Golub-Welsch on the symmetric tridiagonal Jacobi matrix of the (physicists')
// Hermite polynomials.
inline const GaussHermiteRule& gauss_hermite(int n) {
  static std::map<int, GaussHermiteRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  RealVector diag = RealVector::Zero(n);
  RealVector sub(n - 1);
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    const double u0 = es.eigenvectors()(0, i);
    rule.weights[i] = sqrt_pi * u0 * u0;
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

// Integral of f over the real line when f decays like exp(-a x^2): substitute
// and fold the Gaussian back into the quadrature weight.
template <typename F>
double integrate_with_decay(F&& f, double decay_a, int nodes) {
  const GaussHermiteRule& rule = gauss_hermite(nodes);
  const double s = 1.0 / std::sqrt(decay_a);
  double acc = 0.0;
  for (int i = 0; i < rule.nodes.size(); ++i) {
    const double u = rule.nodes[i];
    acc += rule.weights[i] * std::exp(u * u) * f(s * u);
  }
  return s * acc;
}

inline double hermite_poly(int n, double u) {
  double h0 = 1.0;
  if (n == 0) return h0;
  double h1 = 2.0 * u;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * u * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// L2-normalization constant of H_n(sqrt(2) z / w) exp(-z^2 / w^2).
inline double hg_norm_const(int n, double w) {
  return std::pow(2.0 / std::numbers::pi, 0.25) /
         std::sqrt(w * std::pow(2.0, n) * factorial(n));
}

// Hermite-Gaussian factor with independent argument and envelope widths,
// un-normalized.
inline double hg_factor(int n, double z, double w_arg, double w_env) {
  return hermite_poly(n, std::numbers::sqrt2 * z / w_arg) * std::exp(-z * z / (w_env * w_env));
}

}  // namespace detail

/// 1-D Hermite-Gaussian mode function, normalized so the squared integral is 1.
inline double hg_amplitude_1d(int n, double z, double w) {
  if (w <= 0.0) throw ValidationError("hg_amplitude_1d: waist must be positive");
  if (n < 0) throw ValidationError("hg_amplitude_1d: order must be non-negative");
  return detail::hg_norm_const(n, w) * detail::hg_factor(n, z, w, w);
}

/// Separable 2-D mode HG_n(x) * HG_m(y).
inline double hg_amplitude(const HgModeIndex& idx, double x, double y, double w) {
  return hg_amplitude_1d(idx.n, x, w) * hg_amplitude_1d(idx.m, y, w);
}

/// Width compensation: the w_tilde with 1/w_tilde^2 + 1/w_f^2 = 1/w^2.
inline double corrected_width(double w, double w_f) {
  if (w <= 0.0 || w_f <= 0.0) throw ValidationError("corrected_width: waists must be positive");
  if (w_f <= w)
    throw ValidationError("corrected_width: no-real-solution, requires w_f > w");
  return 1.0 / std::sqrt(1.0 / (w * w) - 1.0 / (w_f * w_f));
}

namespace detail {

// 1-D detection/input overlap under the fiber Gaussian. The detection mode
// keeps the Hermite argument width w but switches its envelope to w_env and is
// renormalized to unit L2 norm for that envelope.
inline double smf_overlap_axis(int det_order, int inp_order, const DetectionModel& model,
                               int nodes) {
  const double w_env = model.corrected ? corrected_width(model.w, model.w_f) : model.w;
  const double det_norm2 = integrate_with_decay(
      [&](double z) {
        const double v = hg_factor(det_order, z, model.w, w_env);
        return v * v;
      },
      2.0 / (w_env * w_env), nodes);
  const double det_norm = 1.0 / std::sqrt(det_norm2);

  const double decay = 1.0 / (w_env * w_env) + 1.0 / (model.w * model.w) +
                       1.0 / (model.w_f * model.w_f);
  return integrate_with_decay(
      [&](double z) {
        return det_norm * hg_factor(det_order, z, model.w, w_env) *
               hg_norm_const(inp_order, model.w) * hg_factor(inp_order, z, model.w, model.w) *
               std::exp(-z * z / (model.w_f * model.w_f));
      },
      decay, nodes);
}

}  // namespace detail

/// Overlap of the detection mode for `det` with input mode `inp` through the
/// single-mode-fiber Gaussian filter. Evaluated by separable Gauss-Hermite
/// quadrature; the result must be stable under node doubling.
inline Complex smf_overlap(const HgModeIndex& det, const HgModeIndex& inp,
                           const DetectionModel& model) {
  if (model.w <= 0.0 || model.w_f <= 0.0)
    throw ValidationError("smf_overlap: waists must be positive");
  const int n = model.quadrature_nodes;
  const double vx = detail::smf_overlap_axis(det.n, inp.n, model, n);
  const double vy = detail::smf_overlap_axis(det.m, inp.m, model, n);
  const double vx2 = detail::smf_overlap_axis(det.n, inp.n, model, 2 * n);
  const double vy2 = detail::smf_overlap_axis(det.m, inp.m, model, 2 * n);
  const double value = vx * vy;
  const double value2 = vx2 * vy2;
  if (std::abs(value2 - value) > 1e-10 * std::max(1.0, std::abs(value2)))
    throw NumericalError("smf_overlap: integration-failure, result not stable under node doubling");
  return Complex(value2, 0.0);
}

/// Diagonal Gouy unitary in the canonical ordering:
/// diag(1, e^{i phi1}, e^{i phi1}, e^{i phi2}, e^{i phi2}, e^{i phi2}).
inline ComplexMatrix gouy_unitary(double phi1, double phi2) {
  ComplexMatrix u = ComplexMatrix::Zero(6, 6);
  const auto modes = canonical_modes();
  for (int k = 0; k < 6; ++k) {
    const int order = modes[static_cast<std::size_t>(k)].order();
    const double phi = order == 0 ? 0.0 : (order == 1 ? phi1 : phi2);
    u(k, k) = std::polar(1.0, phi);
  }
  return u;
}

/// Single-Kraus unitary channel applying the order-dependent Gouy phases.
inline KrausChannel gouy_channel(double phi1, double phi2) {
  return KrausChannel(6, {gouy_unitary(phi1, phi2)});
}

/// Mode-level distortion operator of the uncorrected detection holograms:
/// entry (mu, nu) is the SMF overlap of detection mode mu with input mode nu.
inline ComplexMatrix smf_distortion_operator(const DetectionModel& model) {
  const auto modes = canonical_modes();
  ComplexMatrix d(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      d(i, j) = smf_overlap(modes[static_cast<std::size_t>(i)],
                            modes[static_cast<std::size_t>(j)], model);
  return d;
}

/// Cross-talk probabilities P^i_j = Tr(M_j |phi_i><phi_i|) for a complete POVM.
inline CrosstalkMatrix crosstalk_matrix(const std::vector<PureState>& probes, const Povm& povm) {
  RealMatrix p(povm.size(), probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (probes[i].dim() != povm.dim())
      throw ValidationError("crosstalk_matrix: dimension mismatch");
    const ProbDistribution col =
        born_probabilities(DensityMatrix::from_pure(probes[i]), povm);
    p.col(static_cast<int>(i)) = col.values();
  }
  return CrosstalkMatrix{std::move(p)};
}

/// Cross-talk for possibly incomplete effective operators: raw traces, clipped
/// at zero, no renormalization.
inline CrosstalkMatrix crosstalk_matrix(const std::vector<PureState>& probes,
                                        const std::vector<ComplexMatrix>& elements) {
  if (elements.empty()) throw ValidationError("crosstalk_matrix: no elements");
  RealMatrix p(elements.size(), probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const ComplexMatrix rho = probes[i].projector();
    for (std::size_t j = 0; j < elements.size(); ++j) {
      if (elements[j].rows() != probes[i].dim())
        throw ValidationError("crosstalk_matrix: dimension mismatch");
      p(static_cast<int>(j), static_cast<int>(i)) =
          std::max(real_trace_product(elements[j], rho), 0.0);
    }
  }
  return CrosstalkMatrix{std::move(p)};
}

/// Similarity parameter S = (sum sqrt(P * Q))^2 / (sum P * sum Q); equals 1
/// iff the matrices are proportional (Cauchy-Schwarz).
inline double similarity(const CrosstalkMatrix& measured, const CrosstalkMatrix& ideal) {
  if (measured.probs.rows() != ideal.probs.rows() ||
      measured.probs.cols() != ideal.probs.cols())
    throw ValidationError("similarity: shape mismatch");
  const double cross = measured.probs.cwiseProduct(ideal.probs).cwiseSqrt().sum();
  const double denom = measured.probs.sum() * ideal.probs.sum();
  if (denom <= 0.0) throw ValidationError("similarity: non-positive total probability");
  return cross * cross / denom;
}

/// Which synthetic SPAM corruption to apply to the measurement.
enum class SpamKind { none, gouy, smf, both };

struct SpamParams {
  double phi1 = 0.92;
  double phi2 = 1.97;
  double w = 1.0;
  double w_f = 2.0;
};

/// Effective measurement operators under the synthetic SPAM model. Gouy
/// corruption conjugates as E1 M E1^dag; SMF filtering sandwiches with the
/// uncorrected-mode distortion operator. The result is generally not a
/// complete POVM, so outcome probabilities must be renormalized.
inline std::vector<ComplexMatrix> effective_povm_elements(const Povm& ideal, SpamKind kind,
                                                          const SpamParams& params = {}) {
  if (kind != SpamKind::none && ideal.dim() != 6)
    throw ValidationError("effective_povm_elements: SPAM corruption is defined for d = 6");
  // detection amplitude <phi|D U|chi> with U = E1^dag, so M -> U^dag D^dag M D U
  ComplexMatrix c = ComplexMatrix::Identity(ideal.dim(), ideal.dim());
  if (kind == SpamKind::smf || kind == SpamKind::both) {
    DetectionModel model;
    model.w = params.w;
    model.w_f = params.w_f;
    model.corrected = false;
    c = smf_distortion_operator(model);
  }
  if (kind == SpamKind::gouy || kind == SpamKind::both)
    c = c * gouy_unitary(params.phi1, params.phi2).adjoint();

  std::vector<ComplexMatrix> elements;
  elements.reserve(ideal.size());
  for (const auto& m : ideal.elements()) elements.push_back(c.adjoint() * m * c);
  return elements;
}

/// Outcome distribution under (possibly incomplete) effective operators:
/// traces clipped at zero and renormalized, as for frequencies conditioned on
/// a detection event.
inline RealVector corrupted_probabilities(const DensityMatrix& rho,
                                          const std::vector<ComplexMatrix>& elements) {
  RealVector p(static_cast<int>(elements.size()));
  for (std::size_t k = 0; k < elements.size(); ++k) {
    double v = real_trace_product(elements[k], rho.matrix());
    if (v < -tol::prob_clip)
      throw ValidationError("corrupted_probabilities: effective operator not positive");
    p[static_cast<int>(k)] = std::max(v, 0.0);
  }
  const double sum = p.sum();
  if (sum <= 0.0) throw ValidationError("corrupted_probabilities: zero total probability");
  return p / sum;
}

}  // namespace qtomo
