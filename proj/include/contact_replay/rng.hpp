#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace contact_replay {

using Rng = std::mt19937_64;

// Derives an independent generator for a named component ("env", "explore",
// "relabel", "sample", "init", "eval") from the run's root seed, so toggling
// one component never shifts another component's draws.
inline Rng make_stream(std::uint64_t root_seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  // splitmix64 finalizer over the mixed value
  std::uint64_t z = root_seed ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  std::seed_seq seq{static_cast<std::uint32_t>(z), static_cast<std::uint32_t>(z >> 32),
                    static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(h)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

std::string rng_state(const Rng& rng);
void set_rng_state(Rng& rng, const std::string& state);

}  // namespace contact_replay
