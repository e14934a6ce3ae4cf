#include "test_helpers.hpp"

#include "qtomo/povm_builder.hpp"

using namespace qtomo;
using Catch::Approx;

namespace {

double max_pairwise_deviation(const std::vector<PureState>& states, double target) {
  double dev = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      const double s = std::norm(states[i].amplitudes().dot(states[j].amplitudes()));
      dev = std::max(dev, std::abs(s - target));
    }
  return dev;
}

}  // namespace

TEST_CASE("d=2 SIC: four tetrahedral states with overlap 1/3", "[povm_builder]") {
  const Povm& sic = test::shared_sic(2);
  REQUIRE(sic.size() == 4);
  const auto states = sic_states(sic);
  CHECK(max_pairwise_deviation(states, 1.0 / 3) < 1e-8);
  for (const auto& s : states)
    CHECK(std::norm(s.amplitudes().dot(s.amplitudes())) == Approx(1.0).margin(1e-14));
}

TEST_CASE("d=6 SIC: overlaps 1/7, completeness to 1e-10", "[povm_builder]") {
  const Povm& sic = test::shared_sic(6);
  REQUIRE(sic.size() == 36);
  const auto states = sic_states(sic);
  CHECK(max_pairwise_deviation(states, 1.0 / 7) < 1e-6);

  ComplexMatrix sum = ComplexMatrix::Zero(6, 6);
  for (const auto& e : sic.elements()) sum += e;
  CHECK(max_abs(sum - ComplexMatrix::Identity(6, 6)) < 1e-10);
}

TEST_CASE("build_sic is deterministic and improves the frame potential", "[povm_builder]") {
  SicSearchConfig config;
  config.dim = 3;
  config.seed = 42;
  SicBuildReport report_a, report_b;
  const Povm a = build_sic(config, &report_a);
  const Povm b = build_sic(config, &report_b);
  for (std::size_t k = 0; k < a.size(); ++k)
    CHECK(max_abs(a.elements()[k] - b.elements()[k]) == 0.0);
  CHECK(report_a.final_frame_potential <= report_a.initial_frame_potential);
  CHECK(report_a.winner_restart == report_b.winner_restart);
}

TEST_CASE("build_sic reports failure to converge", "[povm_builder]") {
  SicSearchConfig config;
  config.dim = 6;
  config.max_iterations = 2;
  config.restarts = 1;
  config.tolerance = 1e-12;
  CHECK_THROWS_AS(build_sic(config), NumericalError);
}

TEST_CASE("verify_ic ranks measurement families", "[povm_builder]") {
  const Povm& sic = test::shared_sic(6);

  SECTION("the SIC is informationally complete") {
    const IcReport report = verify_ic(sic);
    CHECK(report.rank == 36);
    CHECK(report.is_ic);
    CHECK(report.completeness_residual < 1e-10);
  }

  SECTION("computational-basis projectors span only the diagonal") {
    std::vector<ComplexMatrix> projectors;
    for (int k = 0; k < 6; ++k) {
      ComplexMatrix p = ComplexMatrix::Zero(6, 6);
      p(k, k) = 1.0;
      projectors.push_back(p);
    }
    const IcReport report = verify_ic(Povm(6, projectors));
    CHECK(report.rank == 6);
    CHECK_FALSE(report.is_ic);
  }

  SECTION("dropping one SIC element loses exactly one rank") {
    std::vector<ComplexMatrix> reduced(sic.elements().begin(), sic.elements().end() - 1);
    const IcReport report = verify_ic(6, reduced);
    CHECK(report.rank == 35);
    CHECK_FALSE(report.is_ic);
  }
}
