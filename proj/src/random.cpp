#include "cqcovert/random.hpp"

#include <cmath>

namespace cqcovert {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

RealVector random_probability(Index k, Rng& rng) {
  RealVector p(k);
  for (Index i = 0; i < k; ++i) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    p(i) = -std::log(u);
  }
  return p / p.sum();
}

namespace {

Matrix ginibre(Index rows, Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = Complex(standard_normal(rng), standard_normal(rng));
  return g;
}

}  // namespace

Matrix random_unitary(Index d, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(ginibre(d, d, rng));
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < d; ++i) {
    Complex ph = r(i, i) / std::abs(r(i, i));
    q.col(i) *= ph;
  }
  return q;
}

HermitianMatrix random_hermitian(Index d, Rng& rng) {
  Matrix g = ginibre(d, d, rng);
  return HermitianMatrix::symmetrized(g + g.adjoint());
}

HermitianMatrix random_positive_definite(Index d, Rng& rng, double floor) {
  Matrix g = ginibre(d, d, rng);
  Matrix p = g * g.adjoint() / static_cast<double>(d) + floor * Matrix::Identity(d, d);
  return HermitianMatrix::symmetrized(p);
}

DensityOperator random_density(Index d, Rng& rng, Index rank) {
  if (rank < 0) rank = d;
  Matrix g = ginibre(d, rank, rng);
  Matrix p = g * g.adjoint();
  p /= p.trace().real();
  return DensityOperator(HermitianMatrix::symmetrized(p));
}

DensityOperator random_full_rank_density(Index d, Rng& rng, double floor) {
  Matrix p = random_density(d, rng).matrix() * (1.0 - floor) +
             Matrix::Identity(d, d) * (floor / static_cast<double>(d));
  return DensityOperator(HermitianMatrix::symmetrized(p));
}

DensityOperator random_diagonal_density(Index d, Rng& rng) {
  return DensityOperator(HermitianMatrix::diagonal(random_probability(d, rng)));
}

DensityOperator random_pure_state(Index d, Rng& rng) {
  Vector v = ginibre(d, 1, rng).col(0);
  v.normalize();
  return DensityOperator(HermitianMatrix::symmetrized(v * v.adjoint()));
}

}  // namespace cqcovert
