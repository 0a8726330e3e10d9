#include "biasprobe/rng.hpp"

namespace biasprobe {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 14695981039346656037ULL;  // offset basis
  for (unsigned char byte : data) {
    hash ^= static_cast<std::uint64_t>(byte);
    hash *= 1099511628211ULL;  // FNV prime
  }
  return hash;
}

std::uint64_t splitmix64_mix(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return splitmix64_mix(state_);
}

std::uint64_t SplitMix64::next_below(std::uint64_t bound) {
  // Multiply-shift mapping; bias is on the order of bound / 2^64.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next()) * bound) >> 64);
}

}  // namespace biasprobe
