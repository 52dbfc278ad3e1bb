#include "stochflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace stochflow::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

std::array<std::uint32_t, 4> block(std::uint64_t seed, const DrawKey& key) {
    const std::array<std::uint32_t, 4> ctr{
        key.node,
        key.level ^ (static_cast<std::uint32_t>(key.stream) << 24),
        static_cast<std::uint32_t>(key.path),
        static_cast<std::uint32_t>(key.path >> 32),
    };
    return philox4x32(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    // (0, 1]
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

double uniform(std::uint64_t seed, const DrawKey& key) {
    const auto b = block(seed, key);
    return to_unit(b[0], b[1]);
}

double standard_normal(std::uint64_t seed, const DrawKey& key) {
    const auto b = block(seed, key);
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    const auto b = block(seed, DrawKey{Stream::seed_derivation, index, 0, 0});
    return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

}  // namespace stochflow::rng
