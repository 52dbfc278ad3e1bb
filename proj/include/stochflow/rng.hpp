#pragma once

// Counter-based normal draws keyed by (seed, stream, path, level, node).
// Every draw is a pure function of its key, so generation order and thread
// count never change the numbers.

#include <array>
#include <cstdint>

namespace stochflow::rng {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

enum class Stream : std::uint32_t {
    wiener = 1,
    sheet = 2,
    seed_derivation = 3,
    uniform = 4,
    model = 5,
};

struct DrawKey {
    Stream stream = Stream::wiener;
    std::uint64_t path = 0;
    std::uint32_t level = 0;
    std::uint32_t node = 0;
};

/// Uniform double in (0, 1].
double uniform(std::uint64_t seed, const DrawKey& key);

/// Standard normal via Box-Muller on one Philox block.
double standard_normal(std::uint64_t seed, const DrawKey& key);

/// Independent child seed for Monte Carlo replicate `index`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace stochflow::rng
