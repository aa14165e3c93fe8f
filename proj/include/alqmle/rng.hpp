// Deterministic random number generation and seed derivation.
//
// All randomness in the library flows through the xoshiro256++ generator
// below, with explicit inverse-CDF / Box-Muller transforms instead of the
// standard-library distributions, whose output sequences are not pinned by
// the standard. Identical seeds therefore give bit-identical streams on
// every platform.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <utility>

namespace alqmle {

namespace detail {

// splitmix64 finalizer; also used as the stateless mixing step of
// derive_seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Stable hash-fold of a master seed with labeled indices, e.g.
//   derive_seed(master, {{"n", 1000}, {"rep", 17}})
// An empty label list returns the master seed unchanged. The fold is
// mix64(mix64(state ^ fnv1a(label)) ^ index) per entry, so any change in a
// label name or index yields an unrelated stream.
inline std::uint64_t derive_seed(
    std::uint64_t master,
    std::initializer_list<std::pair<std::string_view, std::uint64_t>> labels) {
  std::uint64_t state = master;
  for (const auto& [label, index] : labels) {
    state = detail::mix64(state ^ detail::fnv1a64(label));
    state = detail::mix64(state ^ index);
  }
  return state;
}

// xoshiro256++ with splitmix64 seeding, plus the handful of variate
// transforms the artifact needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += 0x9e3779b97f4a7c15ull;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53 random mantissa bits.
  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached so the draw count is deterministic.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Exponential with mean 1 by inversion.
  double exponential() { return -std::log(1.0 - uniform01()); }

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace alqmle
