#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace poselift {

// Seeded random source. Uses std::mt19937_64 (bit-exact engine per the
// standard) with explicit value derivation, so every stream is reproducible
// from its seed. Distribution helpers are hand-derived rather than
// std::uniform_*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unit normal via the polar method. No cached spare, so the stream state is
  // exactly the engine state.
  double normal();

  // Uniform integer in [0, n), n > 0. Rejection sampling, unbiased.
  int uniform_int(int n);

  std::string serialize() const;
  void restore(const std::string& state);

  // Derives an independent stream seed from (seed, stream) via splitmix64.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

// In-place Fisher-Yates shuffle with a pinned draw order.
void shuffle_indices(std::vector<int>& v, Rng& rng);

}  // namespace poselift
