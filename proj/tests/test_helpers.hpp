#pragma once

#include "raln/random.hpp"
#include "raln/types.hpp"

#include <cmath>

namespace raln::testing {

inline Rng seeded(std::uint64_t seed) { return Rng(mix_seed(seed)); }

inline Matrix random_symmetric(Index n, Rng& rng) {
    const Matrix g = gaussian_matrix(n, n, rng);
    return 0.5 * (g + g.transpose());
}

inline Matrix random_psd(Index n, Index rank, Rng& rng) {
    const Matrix g = gaussian_matrix(n, rank, rng);
    return g * g.transpose();
}

// Distance between two unit vectors, ignoring sign.
inline double sign_free_distance(const Vector& a, const Vector& b) {
    return std::min((a - b).norm(), (a + b).norm());
}

// Uniform integer in [lo, hi].
inline Index uniform_index(Rng& rng, Index lo, Index hi) {
    std::uniform_int_distribution<Index> dist(lo, hi);
    return dist(rng);
}

}  // namespace raln::testing
