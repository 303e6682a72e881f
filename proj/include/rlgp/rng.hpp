// Deterministic counter-based random number generation.
//
// All stochastic pieces of the benchmark generators draw from named
// substreams of a single seed, so that e.g. enlarging the test design does
// not perturb the training draws. The generator is a splitmix64 stream;
// floating-point conversion avoids platform-dependent library distributions
// so outputs are bit-identical for a fixed seed.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace rlgp {

enum class Stream : std::uint64_t {
  generic = 0,
  design = 1,
  f1 = 2,
  f2 = 3,
  noise = 4,
  hyperplane = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::generic)
      : state_(mix(seed ^ mix(0x9e3779b97f4a7c15ULL *
                              (static_cast<std::uint64_t>(stream) + 1)))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1); never returns an endpoint, safe under log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the spare deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, bound), bound >= 1. Rejection sampling keeps the
  // draw unbiased while staying deterministic for a fixed stream.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = next_u64();
    while (draw >= limit) draw = next_u64();
    return draw % bound;
  }

  // Uniformly random permutation of {0, ..., n-1} (Fisher-Yates).
  std::vector<int> permutation(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rlgp
