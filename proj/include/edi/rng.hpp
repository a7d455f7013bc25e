#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace edi {

// mt19937_64 output is fixed by the standard; every conversion below is ours
// so that streams are reproducible across standard library implementations.
using Rng = std::mt19937_64;

/// Uniform draw on the half-open interval [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Fisher-Yates shuffle driven by uniform_index.
void shuffle_indices(std::span<std::size_t> values, Rng& rng);

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a sub-stream identified by (master, a, b).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace edi
