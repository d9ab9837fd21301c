#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bayesdes {

using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Deterministic generator for the stream addressed by (seed, path...).
/// Distinct paths give statistically independent streams, so results never
/// depend on the order or thread in which streams are consumed.
inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t h = detail::splitmix64(seed);
  for (auto p : path) h = detail::splitmix64(h ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(detail::splitmix64(h)),
                    static_cast<std::uint32_t>(detail::splitmix64(h) >> 32)};
  return Rng(seq);
}

/// Fresh child stream drawn from a parent generator.
inline Rng spawn(Rng& parent) {
  const std::uint64_t a = parent();
  return substream(a);
}

}  // namespace bayesdes
