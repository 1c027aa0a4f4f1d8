#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stvad {

/// Deterministic random source. Every consumer derives its own stream from
/// (seed, stream id) so modules can draw independently without perturbing each
/// other's sequences; identical (seed, stream) pairs always produce identical
/// values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : root_(seed), engine_(mix(seed, stream)) {}

  /// Derives an independent child stream.
  Rng split(std::uint64_t stream) const { return Rng(root_, stream); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [lo, hi). Implemented directly so results do not depend on the
  /// standard library's distribution internals.
  double uniform(double lo = 0.0, double hi = 1.0) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  int uniform_int(int lo, int hi) {  // inclusive range [lo, hi]
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller, one value per call for reproducibility.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the (seed, stream) pair.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t root_ = 0;
  std::mt19937_64 engine_;
};

/// Fixed stream ids so every stochastic consumer has a stable lane.
namespace rng_stream {
constexpr std::uint64_t kGeneratorInit = 1;
constexpr std::uint64_t kDiscriminatorInit = 2;
constexpr std::uint64_t kBatchSampler = 3;
constexpr std::uint64_t kSynthesis = 4;
constexpr std::uint64_t kHoldout = 5;
}  // namespace rng_stream

}  // namespace stvad
