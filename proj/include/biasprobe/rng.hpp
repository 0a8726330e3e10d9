#pragma once

#include <cstdint>
#include <string_view>

namespace biasprobe {

// Seed-derivation primitives. Both functions are pinned to their published
// reference constants so that probe provenance (stream seeds recorded in
// traces) stays portable across implementations.

/// FNV-1a over the raw bytes of `data`. fnv1a64("") is the offset basis,
/// 14695981039346656037.
std::uint64_t fnv1a64(std::string_view data);

/// The SplitMix64 output finalizer (shift-xor-multiply mix, no state step).
std::uint64_t splitmix64_mix(std::uint64_t x);

/// Small deterministic PRNG: the SplitMix64 sequence.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform draw in [0, bound). bound must be non-zero.
  std::uint64_t next_below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

}  // namespace biasprobe
