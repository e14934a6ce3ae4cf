#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qtomo/errors.hpp"
#include "qtomo/rng.hpp"

namespace qtomo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace tol {
inline constexpr double state_norm = 1e-12;
inline constexpr double hermitian = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double eigenvalue = 1e-10;
inline constexpr double prob_clip = 1e-12;
inline constexpr double prob_sum = 1e-9;
inline constexpr double kraus_tp = 1e-8;
}  // namespace tol

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

// max_{ij} |m_ij - conj(m_ji)|
inline double hermiticity_deviation(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double max_abs(const ComplexMatrix& m) {
  return m.cwiseAbs().maxCoeff();
}

/// Unit-norm pure state |psi> of a d-dimensional qudit. For d = 6 the basis
/// ordering is the canonical HG ordering [HG00, HG01, HG10, HG02, HG11, HG20].
class PureState {
 public:
  explicit PureState(ComplexVector amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() < 1 || !amps_.allFinite())
      throw ValidationError("PureState: amplitudes must be a finite non-empty vector");
    const double norm = amps_.norm();
    if (std::abs(norm - 1.0) > tol::state_norm)
      throw ValidationError("PureState: norm deviates from 1 by more than 1e-12");
    amps_ /= norm;
  }

  int dim() const { return static_cast<int>(amps_.size()); }
  const ComplexVector& amplitudes() const { return amps_; }

  ComplexMatrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  ComplexVector amps_;
};

/// Hermitian, unit-trace, positive semidefinite matrix. Eigenvalues in
/// (-1e-10, 0) are clipped to zero on construction and the matrix is
/// renormalized; anything more negative is rejected.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m) : mat_(std::move(m)) {
    if (mat_.rows() != mat_.cols() || mat_.rows() < 1 || !all_finite(mat_))
      throw ValidationError("DensityMatrix: must be a finite square matrix");
    if (hermiticity_deviation(mat_) > tol::hermitian)
      throw ValidationError("DensityMatrix: not Hermitian within 1e-10");
    mat_ = 0.5 * (mat_ + mat_.adjoint()).eval();
    const double tr = mat_.trace().real();
    if (std::abs(tr - 1.0) > tol::trace)
      throw ValidationError("DensityMatrix: trace deviates from 1 by more than 1e-10");
    mat_ /= tr;

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(mat_);
    const RealVector& ev = es.eigenvalues();
    if (ev.minCoeff() < -tol::eigenvalue)
      throw ValidationError("DensityMatrix: eigenvalue below -1e-10");
    if (ev.minCoeff() < 0.0) {
      RealVector clipped = ev.cwiseMax(0.0);
      mat_ = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
      mat_ /= mat_.trace().real();
    }
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return DensityMatrix(psi.projector());
  }

  static DensityMatrix maximally_mixed(int dim) {
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const ComplexMatrix& matrix() const { return mat_; }

 private:
  ComplexMatrix mat_;
};

/// Set of positive operators M_gamma summing to the identity.
class Povm {
 public:
  Povm(int dim, std::vector<ComplexMatrix> elements, std::vector<std::string> labels = {})
      : dim_(dim), elements_(std::move(elements)), labels_(std::move(labels)) {
    if (dim_ < 2) throw ValidationError("Povm: dim must be >= 2");
    if (elements_.empty()) throw ValidationError("Povm: no elements");
    ComplexMatrix sum = ComplexMatrix::Zero(dim_, dim_);
    for (const auto& e : elements_) {
      if (e.rows() != dim_ || e.cols() != dim_ || !all_finite(e))
        throw ValidationError("Povm: element has wrong shape or non-finite entries");
      if (hermiticity_deviation(e) > tol::hermitian)
        throw ValidationError("Povm: element not Hermitian within 1e-10");
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(e, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -tol::eigenvalue)
        throw ValidationError("Povm: element not positive semidefinite within 1e-10");
      sum += e;
    }
    if (max_abs(sum - ComplexMatrix::Identity(dim_, dim_)) > tol::hermitian)
      throw ValidationError("Povm: elements do not sum to identity within 1e-10");
    if (labels_.empty()) {
      labels_.reserve(elements_.size());
      for (std::size_t k = 0; k < elements_.size(); ++k) labels_.push_back(std::to_string(k));
    }
    if (labels_.size() != elements_.size())
      throw ValidationError("Povm: label count does not match element count");
  }

  int dim() const { return dim_; }
  std::size_t size() const { return elements_.size(); }
  const std::vector<ComplexMatrix>& elements() const { return elements_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  int dim_;
  std::vector<ComplexMatrix> elements_;
  std::vector<std::string> labels_;
};

/// Operator-sum (Kraus) representation of a trace-preserving channel.
class KrausChannel {
 public:
  KrausChannel(int dim, std::vector<ComplexMatrix> operators)
      : dim_(dim), ops_(std::move(operators)) {
    if (ops_.empty() || ops_.size() > static_cast<std::size_t>(dim_) * dim_)
      throw ValidationError("KrausChannel: need 1 <= K <= d^2 operators");
    ComplexMatrix sum = ComplexMatrix::Zero(dim_, dim_);
    for (const auto& e : ops_) {
      if (e.rows() != dim_ || e.cols() != dim_ || !all_finite(e))
        throw ValidationError("KrausChannel: operator has wrong shape or non-finite entries");
      sum += e.adjoint() * e;
    }
    if (max_abs(sum - ComplexMatrix::Identity(dim_, dim_)) > tol::kraus_tp)
      throw ValidationError("KrausChannel: sum E_k^dag E_k deviates from identity beyond 1e-8");
  }

  int dim() const { return dim_; }
  const std::vector<ComplexMatrix>& operators() const { return ops_; }

 private:
  int dim_;
  std::vector<ComplexMatrix> ops_;
};

/// Normalized probability vector over measurement outcomes.
class ProbDistribution {
 public:
  explicit ProbDistribution(RealVector values) : values_(std::move(values)) {
    if (values_.size() < 1 || !values_.allFinite())
      throw ValidationError("ProbDistribution: values must be finite and non-empty");
    if (values_.minCoeff() < 0.0)
      throw ValidationError("ProbDistribution: negative probability");
    const double sum = values_.sum();
    if (std::abs(sum - 1.0) > tol::prob_sum)
      throw ValidationError("ProbDistribution: sum deviates from 1 by more than 1e-9");
    values_ /= sum;
  }

  int size() const { return static_cast<int>(values_.size()); }
  const RealVector& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }

 private:
  RealVector values_;
};

inline double real_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  // Tr(a b) = sum_ij a_ij b_ji
  return a.cwiseProduct(b.transpose()).sum().real();
}

/// Haar-random pure state: i.i.d. standard complex Gaussian amplitudes,
/// normalized.
inline PureState haar_random_pure(int dim, Rng& rng) {
  if (dim < 2) throw ValidationError("haar_random_pure: dim must be >= 2");
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexVector v(dim);
  for (int i = 0; i < dim; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v[i] = Complex(re, im);
  }
  v /= v.norm();
  return PureState(std::move(v));
}

/// Outcome probabilities p_gamma = Re Tr(M_gamma rho). Tiny negative values
/// (>= -1e-12) are clipped to zero; the vector is renormalized only when the
/// total is within 1e-9 of 1, otherwise the POVM is inconsistent.
inline ProbDistribution born_probabilities(const DensityMatrix& rho, const Povm& povm) {
  if (rho.dim() != povm.dim())
    throw ValidationError("born_probabilities: dimension mismatch");
  RealVector p(povm.size());
  for (std::size_t k = 0; k < povm.size(); ++k) {
    double v = real_trace_product(povm.elements()[k], rho.matrix());
    if (v < 0.0) {
      if (v < -tol::prob_clip)
        throw ValidationError("born_probabilities: probability below -1e-12");
      v = 0.0;
    }
    p[static_cast<int>(k)] = v;
  }
  if (std::abs(p.sum() - 1.0) > tol::prob_sum)
    throw ValidationError("born_probabilities: inconsistent POVM, outcome sum deviates from 1");
  return ProbDistribution(std::move(p));
}

/// <psi| rho |psi>, clamped to [0, 1] against round-off.
inline double fidelity(const PureState& target, const DensityMatrix& estimate) {
  if (target.dim() != estimate.dim())
    throw ValidationError("fidelity: dimension mismatch");
  const Complex f = target.amplitudes().adjoint() * estimate.matrix() * target.amplitudes();
  if (std::abs(f.imag()) > tol::hermitian)
    throw ValidationError("fidelity: value has non-negligible imaginary part");
  return std::clamp(f.real(), 0.0, 1.0);
}

/// Tr(rho^2).
inline double purity(const DensityMatrix& rho) {
  return real_trace_product(rho.matrix(), rho.matrix());
}

// Channel application on a raw matrix, no physicality checks. Used internally
// and for analyzing reconstructed (approximately trace-preserving) processes.
inline ComplexMatrix apply_kraus_ops(const std::vector<ComplexMatrix>& ops,
                                     const ComplexMatrix& rho) {
  ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
  for (const auto& e : ops) out += e * rho * e.adjoint();
  return out;
}

/// rho' = sum_k E_k rho E_k^dag.
inline DensityMatrix apply_channel(const KrausChannel& channel, const DensityMatrix& rho) {
  if (channel.dim() != rho.dim())
    throw ValidationError("apply_channel: dimension mismatch");
  ComplexMatrix out = apply_kraus_ops(channel.operators(), rho.matrix());
  if (std::abs(out.trace().real() - 1.0) > tol::trace)
    throw ValidationError("apply_channel: invalid channel, trace not preserved within 1e-10");
  return DensityMatrix(std::move(out));
}

}  // namespace qtomo
