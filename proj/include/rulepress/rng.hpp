#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rulepress/common.hpp"

namespace rulepress {

// splitmix64 finalizer; used to mix a master seed with stream identifiers so
// that every (purpose, index) pair gets a statistically independent substream.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                 std::uint64_t index = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ purpose) ^ index);
}

// Stream identifiers. Results must not depend on execution order or thread
// count, so every independent unit of randomness draws from its own stream.
namespace stream {
constexpr std::uint64_t kTrees = 0x74726565ULL;      // per-tree substreams
constexpr std::uint64_t kFolds = 0x666f6c64ULL;      // fold assignment
constexpr std::uint64_t kCvFit = 0x63766669ULL;      // per-fold pipeline refits
constexpr std::uint64_t kNull = 0x6e756c6cULL;       // bootstrap null datasets
constexpr std::uint64_t kNullFit = 0x6e666974ULL;    // null-model refits
constexpr std::uint64_t kMaxDepth = 0x64657074ULL;   // tree-size sampler
}  // namespace stream

/// Seeded generator with self-contained draw helpers. The helpers avoid
/// <random> distributions so sequences are identical across standard library
/// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below requires n > 0");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  // Exponential with the given mean (inverse CDF).
  double exponential(double mean) {
    double u = uniform01();
    return -mean * std::log1p(-u);
  }

  // Standard normal via Box-Muller; draws two uniforms per call.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

inline Rng substream(std::uint64_t master, std::uint64_t purpose,
                     std::uint64_t index = 0) {
  return Rng(derive_seed(master, purpose, index));
}

}  // namespace rulepress
