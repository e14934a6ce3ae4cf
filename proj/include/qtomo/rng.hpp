#pragma once

#include <cstdint>
#include <random>

namespace qtomo {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable child-seed derivation. Substreams (per record, per epoch, per
// restart) are keyed by (stream, index) so results do not depend on the
// order in which streams are consumed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

// Fixed stream tags, one per independent consumer of randomness.
namespace stream {
inline constexpr std::uint64_t sic_restart = 1;
inline constexpr std::uint64_t dataset_record = 2;
inline constexpr std::uint64_t weight_init = 3;
inline constexpr std::uint64_t dropout = 4;
inline constexpr std::uint64_t shuffle = 5;
inline constexpr std::uint64_t curve_cell = 6;
inline constexpr std::uint64_t process_probe = 7;
}  // namespace stream

}  // namespace qtomo
