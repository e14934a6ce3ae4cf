#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "qtomo/povm_builder.hpp"
#include "qtomo/quantum_core.hpp"

namespace qtomo::test {

// One SIC per dimension for the whole test binary; construction is
// deterministic, so sharing does not couple the tests.
inline const Povm& shared_sic(int dim) {
  static std::map<int, Povm> cache;
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  SicSearchConfig config;
  config.dim = dim;
  config.seed = 1;
  return cache.emplace(dim, build_sic(config)).first->second;
}

inline DensityMatrix random_density(int dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ComplexMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
  ComplexMatrix m = a * a.adjoint();
  m /= m.trace().real();
  return DensityMatrix(std::move(m));
}

inline RealVector random_distribution(int n, Rng& rng) {
  std::uniform_real_distribution<double> uniform(1e-3, 1.0);
  RealVector v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng);
  return v / v.sum();
}

}  // namespace qtomo::test
