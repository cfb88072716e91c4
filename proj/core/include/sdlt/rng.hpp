#pragma once

#include <cstdint>
#include <random>

namespace sdlt {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-trial seed: mix64(master + (index + 1) * golden-gamma) xor mix64(master).
/// Depends only on (master, index), never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + (index + 1) * 0x9e3779b97f4a7c15ULL) ^ mix64(master);
}

/// Deterministic random source. The engine output sequence is fixed by the
/// standard; draws are built from raw engine output instead of
/// std::*_distribution, whose algorithms vary across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform in [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sdlt
