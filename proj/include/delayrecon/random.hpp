#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace delayrecon {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; the building block for all seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a root seed and a purpose tag.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) noexcept;

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Uniform double in (0, 1) built from the top 53 bits of a hash.
double unit_open(std::uint64_t bits) noexcept;

/// Standard normal sample that depends only on (seed, row, col).
double counter_normal(std::uint64_t seed, std::uint64_t row, std::uint64_t col) noexcept;

/// Uniform double in [0, 1) from a generator, independent of libstdc++ distribution details.
double uniform01(Rng& rng) noexcept;

}  // namespace delayrecon
