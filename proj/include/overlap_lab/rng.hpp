#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace overlap_lab {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent substreams of the master seed. The seed of substream (kind, index)
/// is splitmix64(seed ^ splitmix64((kind << 40) ^ index)), so chains or
/// repetitions never share state and can be run in any order.
enum class StreamKind : std::uint64_t {
  chain = 1,
  phases = 2,
  rejection = 3,
  synthetic = 4,
};

constexpr std::uint64_t substream_seed(std::uint64_t seed, StreamKind kind,
                                       std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(kind) << 40) ^ index));
}

inline Engine make_engine(std::uint64_t seed, StreamKind kind, std::uint64_t index) {
  return Engine(substream_seed(seed, kind, index));
}

/// Standard complex Gaussian: E Z = 0, E Z^2 = 0, E|Z|^2 = 1.
inline std::complex<double> standard_complex_normal(Engine& rng) {
  std::normal_distribution<double> normal;
  const double re = normal(rng);
  const double im = normal(rng);
  return {re / std::numbers::sqrt2, im / std::numbers::sqrt2};
}

inline double uniform01(Engine& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace overlap_lab
