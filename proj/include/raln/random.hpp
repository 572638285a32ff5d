#pragma once

#include "raln/types.hpp"

#include <cstdint>
#include <random>

namespace raln {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Engine for draw `counter` of the stream identified by `seed`. Results do not
/// depend on how draws are scheduled across threads.
inline Rng counter_rng(std::uint64_t seed, std::uint64_t counter) {
    return Rng(mix_seed(mix_seed(seed) ^ mix_seed(counter + 0x632BE59BD9B4E019ULL)));
}

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng, double stddev = 1.0);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, R diagonal made positive).
Matrix random_orthogonal(Index n, Rng& rng);

/// n×k matrix with orthonormal columns spanning a uniformly random subspace.
Matrix random_orthonormal_columns(Index n, Index k, Rng& rng);

}  // namespace raln
