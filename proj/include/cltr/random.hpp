#pragma once

#include <cstdint>
#include <string_view>

namespace cltr {

/// SplitMix64 finalizer; used to turn one experiment seed into independent
/// per-stage seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// Seed for a named stage ("dataset", "clicks", ...) of a run.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view stage) {
  return splitmix64(base ^ fnv1a64(stage));
}

}  // namespace cltr
