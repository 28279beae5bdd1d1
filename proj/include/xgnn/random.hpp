#pragma once

#include <cmath>
#include <cstdint>
#include <iterator>
#include <numbers>
#include <random>
#include <utility>

namespace xgnn {

/// SplitMix64 finaliser. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named substreams of the single run seed. Every random decision in the
/// library draws from exactly one of these.
enum class Stream : std::uint64_t {
  Mask = 1,     // expander masks, index = map ordinal
  Init = 2,     // weight initialisation, index = parameter ordinal
  Shuffle = 3,  // mini-batch order, index = epoch
  Folds = 4,    // cross-validation fold assignment
  Synth = 5,    // synthetic dataset generation
  Unit = 6,     // per-unit substream inside one mask, index = unit
};

/// Seed of substream (tag, index) under root. Pure function, so the same
/// triple yields the same stream regardless of evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t root, Stream tag,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(root ^ mix64(static_cast<std::uint64_t>(tag))) + mix64(index));
}

/// Portable random source: std::mt19937_64 (bit-exact across standard
/// libraries) with hand-written bounded/real/normal draws, since the
/// std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is discarded.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <std::random_access_iterator It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace xgnn
