#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace neurec {

// All seeded randomness in the library flows through this engine. The mapping
// from raw 64-bit draws to doubles and bounded integers is done here rather
// than through <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream derived from (seed, stream) with a splitmix64 finalizer.
  static Rng stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound) by modulo rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  Engine engine_;
};

// Stream tags so that init, shuffling, dropout and sampling never share draws.
enum class RngStream : std::uint64_t {
  kInit = 1,
  kFactors = 2,
  kShuffle = 3,
  kDropout = 4,
  kNegatives = 5,
  kSplit = 6,
};

inline Rng make_rng(std::uint64_t seed, RngStream tag) {
  return Rng::stream(seed, static_cast<std::uint64_t>(tag));
}

}  // namespace neurec
