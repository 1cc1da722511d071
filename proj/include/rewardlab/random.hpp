#pragma once

#include <cstdint>
#include <random>

namespace rewardlab {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream); distinct streams never share state.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

struct SeedSet {
  std::uint64_t env;
  std::uint64_t noise;
  std::uint64_t init;
};

// env = suite_seed * 1000 + cell_index, noise = env + 1, init = env + 2.
inline SeedSet derive_seeds(std::uint64_t suite_seed, std::uint64_t cell_index) {
  const std::uint64_t base = suite_seed * 1000 + cell_index;
  return {base, base + 1, base + 2};
}

}  // namespace rewardlab
