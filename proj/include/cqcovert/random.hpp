#pragma once

#include <cstdint>
#include <random>

#include "cqcovert/operator.hpp"

namespace cqcovert {

// All sampling goes through mt19937_64 with hand-rolled transforms so streams
// are reproducible across standard library implementations.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
// Independent stream seed for task `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);

// Uniform on the probability simplex of size k.
RealVector random_probability(Index k, Rng& rng);

// Haar-random unitary via QR of a complex Ginibre matrix.
Matrix random_unitary(Index d, Rng& rng);
HermitianMatrix random_hermitian(Index d, Rng& rng);
// Positive definite with smallest eigenvalue >= floor.
HermitianMatrix random_positive_definite(Index d, Rng& rng, double floor = 1e-3);

// Ginibre-induced state of the given rank (defaults to full rank).
DensityOperator random_density(Index d, Rng& rng, Index rank = -1);
// Full-rank state with every eigenvalue >= floor / d.
DensityOperator random_full_rank_density(Index d, Rng& rng, double floor = 0.05);
DensityOperator random_diagonal_density(Index d, Rng& rng);
DensityOperator random_pure_state(Index d, Rng& rng);

}  // namespace cqcovert
