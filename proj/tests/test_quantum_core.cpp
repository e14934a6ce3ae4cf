#include "test_helpers.hpp"

#include "qtomo/optics_model.hpp"
#include "qtomo/quantum_core.hpp"

using namespace qtomo;
using Catch::Approx;

TEST_CASE("haar_random_pure produces unit-norm reproducible states", "[quantum_core]") {
  Rng rng(7);
  const PureState psi = haar_random_pure(6, rng);
  CHECK(psi.amplitudes().norm() == Approx(1.0).margin(1e-12));

  Rng rng_a(7), rng_b(7);
  const PureState a = haar_random_pure(6, rng_a);
  const PureState b = haar_random_pure(6, rng_b);
  CHECK(a.amplitudes() == b.amplitudes());

  CHECK_THROWS_AS(haar_random_pure(1, rng), ValidationError);
}

TEST_CASE("haar mean pairwise overlap matches 1/d", "[quantum_core]") {
  // Monte-Carlo oracle: E |<psi|phi>|^2 = 1/d for independent Haar pairs.
  // |<psi|phi>|^2 ~ Beta(1, d-1), var = (d-1)/(d^2 (d+1)); 3 sigma band below.
  const int n_pairs = 100000;
  const int d = 6;
  Rng rng(11);
  double acc = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const PureState psi = haar_random_pure(d, rng);
    const PureState phi = haar_random_pure(d, rng);
    acc += std::norm(psi.amplitudes().dot(phi.amplitudes()));
  }
  const double mean = acc / n_pairs;
  const double sigma = std::sqrt((d - 1.0) / (double(d) * d * (d + 1.0)) / n_pairs);
  CHECK(std::abs(mean - 1.0 / d) < 3.0 * sigma);
}

TEST_CASE("born probabilities on the SIC", "[quantum_core]") {
  const Povm& sic = test::shared_sic(6);

  SECTION("maximally mixed state is uniform over 36 outcomes") {
    const ProbDistribution p = born_probabilities(DensityMatrix::maximally_mixed(6), sic);
    for (int k = 0; k < p.size(); ++k) CHECK(p[k] == Approx(1.0 / 36).margin(1e-10));
  }

  SECTION("fiducial direction: 1/6 on itself, 1/42 on the others") {
    const auto states = sic_states(sic);
    const ProbDistribution p =
        born_probabilities(DensityMatrix::from_pure(states[3]), sic);
    CHECK(p[3] == Approx(1.0 / 6).margin(1e-6));
    for (int k = 0; k < p.size(); ++k)
      if (k != 3) CHECK(p[k] == Approx(1.0 / 42).margin(1e-6));
  }

  SECTION("random states give normalized distributions") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const ProbDistribution p = born_probabilities(test::random_density(6, rng), sic);
      CHECK(p.values().sum() == Approx(1.0).margin(1e-12));
      CHECK(p.values().minCoeff() >= 0.0);
    }
  }

  SECTION("permutation equivariance") {
    Rng rng(4);
    const DensityMatrix rho = test::random_density(6, rng);
    const ProbDistribution p = born_probabilities(rho, sic);
    std::vector<ComplexMatrix> reversed(sic.elements().rbegin(), sic.elements().rend());
    const ProbDistribution q = born_probabilities(rho, Povm(6, reversed));
    for (int k = 0; k < p.size(); ++k)
      CHECK(q[k] == Approx(p[p.size() - 1 - k]).margin(1e-14));
  }
}

TEST_CASE("fidelity special values and linearity", "[quantum_core]") {
  Rng rng(5);
  const PureState psi = haar_random_pure(6, rng);
  CHECK(fidelity(psi, DensityMatrix::from_pure(psi)) == Approx(1.0).margin(1e-12));
  CHECK(fidelity(psi, DensityMatrix::maximally_mixed(6)) == Approx(1.0 / 6).margin(1e-12));

  ComplexVector e1 = ComplexVector::Zero(6), e2 = ComplexVector::Zero(6);
  e1[0] = 1.0;
  e2[1] = 1.0;
  CHECK(fidelity(PureState(e1), DensityMatrix(e2 * e2.adjoint())) == Approx(0.0).margin(1e-15));

  const DensityMatrix rho1 = test::random_density(6, rng);
  const DensityMatrix rho2 = test::random_density(6, rng);
  const double a = 0.3;
  const DensityMatrix mix(a * rho1.matrix() + (1 - a) * rho2.matrix());
  CHECK(fidelity(psi, mix) ==
        Approx(a * fidelity(psi, rho1) + (1 - a) * fidelity(psi, rho2)).margin(1e-10));
}

TEST_CASE("purity of reference states", "[quantum_core]") {
  Rng rng(6);
  CHECK(purity(DensityMatrix::from_pure(haar_random_pure(6, rng))) == Approx(1.0).margin(1e-12));
  CHECK(purity(DensityMatrix::maximally_mixed(6)) == Approx(1.0 / 6).margin(1e-12));

  ComplexMatrix half = ComplexMatrix::Zero(6, 6);
  half(0, 0) = 0.5;
  half(1, 1) = 0.5;
  CHECK(purity(DensityMatrix(half)) == Approx(0.5).margin(1e-12));
}

TEST_CASE("apply_channel", "[quantum_core]") {
  Rng rng(8);
  const DensityMatrix rho = test::random_density(6, rng);

  SECTION("identity channel returns the input") {
    const KrausChannel id(6, {ComplexMatrix::Identity(6, 6)});
    CHECK(max_abs(apply_channel(id, rho).matrix() - rho.matrix()) < 1e-14);
  }

  SECTION("Gouy channel fixes basis states") {
    ComplexVector e0 = ComplexVector::Zero(6);
    e0[0] = 1.0;
    const DensityMatrix basis(e0 * e0.adjoint());
    const DensityMatrix out = apply_channel(gouy_channel(0.92, 1.97), basis);
    CHECK(max_abs(out.matrix() - basis.matrix()) < 1e-14);
  }

  SECTION("Gouy channel multiplies the (0,5) coherence by exp(-i 1.97)") {
    ComplexVector v = ComplexVector::Zero(6);
    v[0] = v[5] = 1.0 / std::numbers::sqrt2;
    const DensityMatrix in(v * v.adjoint());
    const DensityMatrix out = apply_channel(gouy_channel(0.92, 1.97), in);
    const Complex expected = in.matrix()(0, 5) * std::polar(1.0, -1.97);
    CHECK(std::abs(out.matrix()(0, 5) - expected) < 1e-14);
  }

  SECTION("unitary channel preserves purity") {
    const DensityMatrix out = apply_channel(gouy_channel(0.5, 1.1), rho);
    CHECK(purity(out) == Approx(purity(rho)).margin(1e-10));
  }

  SECTION("channel that leaks trace beyond 1e-10 is rejected") {
    // passes the 1e-8 Kraus check but violates the 1e-10 trace contract
    const double eps = 5e-9;
    const KrausChannel leaky(6, {std::sqrt(1.0 + eps) * ComplexMatrix::Identity(6, 6)});
    CHECK_THROWS_AS(apply_channel(leaky, rho), ValidationError);
  }
}

TEST_CASE("type invariants are enforced", "[quantum_core]") {
  SECTION("density matrix must be Hermitian, unit trace, PSD") {
    ComplexMatrix bad = ComplexMatrix::Identity(2, 2);
    bad(0, 1) = Complex(0.1, 0.0);  // not Hermitian
    CHECK_THROWS_AS(DensityMatrix(bad), ValidationError);

    CHECK_THROWS_AS(DensityMatrix(2.0 * ComplexMatrix::Identity(2, 2)), ValidationError);

    ComplexMatrix indef = ComplexMatrix::Zero(2, 2);
    indef(0, 0) = 1.5;
    indef(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix(indef), ValidationError);
  }

  SECTION("tiny negative eigenvalues are clipped, trace renormalized") {
    ComplexMatrix nearly = ComplexMatrix::Zero(2, 2);
    nearly(0, 0) = 1.0 + 5e-11;
    nearly(1, 1) = -5e-11;
    const DensityMatrix rho(nearly);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
    CHECK(es.eigenvalues().minCoeff() >= 0.0);
    CHECK(rho.matrix().trace().real() == Approx(1.0).margin(1e-15));
  }

  SECTION("POVM completeness is checked") {
    std::vector<ComplexMatrix> elements{ComplexMatrix::Identity(2, 2) * 0.5};
    CHECK_THROWS_AS(Povm(2, elements), ValidationError);
  }

  SECTION("probability vectors reject negatives and bad sums") {
    RealVector neg(2);
    neg << 1.1, -0.1;
    CHECK_THROWS_AS(ProbDistribution(neg), ValidationError);
    RealVector off(2);
    off << 0.6, 0.5;
    CHECK_THROWS_AS(ProbDistribution(off), ValidationError);
  }

  SECTION("Kraus channel needs trace preservation") {
    CHECK_THROWS_AS(KrausChannel(2, {0.5 * ComplexMatrix::Identity(2, 2)}), ValidationError);
  }
}
