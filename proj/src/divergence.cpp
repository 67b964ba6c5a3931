#include "cqcovert/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cqcovert {

DivergenceValue DivergenceValue::of(double v) {
  if (v < 0.0 && v > -1e-9) v = 0.0;
  return {v, true};
}

EnsembleDistribution::EnsembleDistribution(RealVector probs) : p_(std::move(probs)) {
  if (p_.size() < 1) throw Error(ErrorKind::InvalidArgument, "empty distribution");
  if (p_.minCoeff() < 0.0) throw Error(ErrorKind::InvalidArgument, "negative probability");
  if (std::abs(p_.sum() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "probabilities sum to " << p_.sum();
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
}

EnsembleDistribution EnsembleDistribution::uniform(Index k) {
  return EnsembleDistribution(RealVector::Constant(k, 1.0 / static_cast<double>(k)));
}

namespace {

void require_same_dim(const DensityOperator& a, const DensityOperator& b, const char* what) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << what << ": dimensions " << a.dim() << " and " << b.dim();
    throw Error(ErrorKind::DimensionMismatch, os.str());
  }
}

// <v_j| rho |v_j> for every eigenvector v_j of sigma.
RealVector diagonal_in_basis(const Matrix& rho, const Matrix& basis) {
  return (basis.adjoint() * rho * basis).diagonal().real();
}

void require_support(const DensityOperator& inner, const DensityOperator& outer,
                     const char* what) {
  if (!support_contained(inner, outer)) {
    std::ostringstream os;
    os << what << ": support not contained (leakage " << support_leakage(inner, outer) << ")";
    throw Error(ErrorKind::SupportViolation, os.str());
  }
}

}  // namespace

double support_leakage(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_dim(rho, sigma, "support_leakage");
  const Spectrum& s = sigma.spectrum();
  Index r = sigma.rank();
  if (r == sigma.dim()) return 0.0;
  Matrix kernel = s.vectors.rightCols(sigma.dim() - r);
  return std::max(0.0, diagonal_in_basis(rho.matrix(), kernel).sum());
}

bool support_contained(const DensityOperator& rho, const DensityOperator& sigma) {
  return support_leakage(rho, sigma) <= kSupportTolerance;
}

double von_neumann_entropy(const DensityOperator& rho) {
  double h = 0.0;
  const RealVector& v = rho.spectrum().values;
  for (Index i = 0; i < v.size(); ++i)
    if (v(i) > rho.rank_tolerance()) h -= v(i) * std::log(v(i));
  return h;
}

DivergenceValue relative_entropy(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_dim(rho, sigma, "relative_entropy");
  if (!support_contained(rho, sigma)) return DivergenceValue::infinite();
  const Spectrum& s = sigma.spectrum();
  Index r = sigma.rank();
  RealVector weights = diagonal_in_basis(rho.matrix(), s.vectors.leftCols(r));
  double cross = 0.0;
  for (Index j = 0; j < r; ++j) cross += weights(j) * std::log(s.values(j));
  return DivergenceValue::of(-von_neumann_entropy(rho) - cross);
}

DivergenceValue chi_squared(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_dim(rho, sigma, "chi_squared");
  if (!support_contained(rho, sigma)) return DivergenceValue::infinite();
  const Spectrum& s = sigma.spectrum();
  Index r = sigma.rank();
  Matrix x = s.vectors.adjoint() * (rho.matrix() - sigma.matrix()) * s.vectors;
  // Tr{X^2 S^+} = sum_j (1/s_j) sum_i |X_ij|^2 over the support columns.
  double total = 0.0;
  for (Index j = 0; j < r; ++j) total += x.col(j).squaredNorm() / s.values(j);
  return DivergenceValue::of(total);
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  require_same_dim(rho, sigma, "trace_distance");
  Spectrum s = eigh(HermitianMatrix::symmetrized(rho.matrix() - sigma.matrix()));
  return std::min(2.0, s.values.cwiseAbs().sum());
}

double helstrom_error(const DensityOperator& rho, const DensityOperator& sigma) {
  double pe = 0.5 * (1.0 - 0.5 * trace_distance(rho, sigma));
  return std::clamp(pe, 0.0, 0.5);
}

double pinsker_gap(const DensityOperator& rho, const DensityOperator& sigma) {
  DivergenceValue d = relative_entropy(rho, sigma);
  if (!d.finite) return d.value;
  double t = trace_distance(rho, sigma);
  return d.value - 0.5 * t * t;
}

DensityOperator mixture(const EnsembleDistribution& p, const std::vector<DensityOperator>& states) {
  if (static_cast<std::size_t>(p.size()) != states.size() || states.empty()) {
    throw Error(ErrorKind::DimensionMismatch, "mixture: distribution and state counts differ");
  }
  Index d = states.front().dim();
  Matrix m = Matrix::Zero(d, d);
  for (std::size_t x = 0; x < states.size(); ++x) {
    if (states[x].dim() != d) throw Error(ErrorKind::DimensionMismatch, "mixture: state dims differ");
    m += p[static_cast<Index>(x)] * states[x].matrix();
  }
  return DensityOperator(HermitianMatrix::symmetrized(m), states.front().rank_tolerance());
}

double holevo_information(const EnsembleDistribution& p,
                          const std::vector<DensityOperator>& states) {
  DensityOperator avg = mixture(p, states);
  double h = von_neumann_entropy(avg);
  for (std::size_t x = 0; x < states.size(); ++x) {
    h -= p[static_cast<Index>(x)] * von_neumann_entropy(states[x]);
  }
  return std::max(0.0, h);
}

ValueAndDerivative phi_functional(const DensityOperator& sigma1, const DensityOperator& sigma0,
                                  double r) {
  require_same_dim(sigma1, sigma0, "phi_functional");
  require_support(sigma1, sigma0, "phi_functional");
  const Spectrum& s0 = sigma0.spectrum();
  const Spectrum& s1 = sigma1.spectrum();
  double tol0 = sigma0.rank_tolerance();
  double tol1 = sigma1.rank_tolerance();
  Matrix half0 = matrix_function(s0, fn::Pow{r / 2.0}, tol0).matrix();
  Matrix neg1 = matrix_function(s1, fn::Pow{-r}, tol1).matrix();
  Matrix log0 = matrix_function(s0, fn::Log{}, tol0).matrix();
  Matrix log1 = matrix_function(s1, fn::Log{}, tol1).matrix();
  const Matrix& m1 = sigma1.matrix();

  Matrix x = half0 * neg1 * half0;  // s0^{r/2} s1^{-r} s0^{r/2}
  Matrix y = half0 * m1 * half0;    // s0^{r/2} s1 s0^{r/2}
  double t = trace_product(m1, x);
  double num = (neg1 * y * log1).trace().real() -
               0.5 * ((x * m1 * log0).trace().real() + (y * neg1 * log0).trace().real());
  return {-std::log(t), num / t};
}

ValueAndDerivative psi_functional(const DensityOperator& rho1, const DensityOperator& rho0,
                                  double r) {
  require_same_dim(rho1, rho0, "psi_functional");
  require_support(rho1, rho0, "psi_functional");
  const Spectrum& s0 = rho0.spectrum();
  const Spectrum& s1 = rho1.spectrum();
  double tol0 = rho0.rank_tolerance();
  double tol1 = rho1.rank_tolerance();
  Matrix up1 = matrix_function(s1, fn::Pow{1.0 + r}, tol1).matrix();
  Matrix neg0 = matrix_function(s0, fn::Pow{-r}, tol0).matrix();
  Matrix logdiff = matrix_function(s1, fn::Log{}, tol1).matrix() -
                   matrix_function(s0, fn::Log{}, tol0).matrix();
  double t = trace_product(up1, neg0);
  double num = (neg0 * up1 * logdiff).trace().real();
  return {std::log(t), num / t};
}

double overlap_trace(const DensityOperator& sigma0, const DensityOperator& sigma1) {
  require_same_dim(sigma1, sigma0, "overlap_trace");
  require_support(sigma1, sigma0, "overlap_trace");
  const Spectrum& s = sigma0.spectrum();
  Index r = sigma0.rank();
  Matrix rotated = s.vectors.leftCols(r).adjoint() * sigma1.matrix();
  double total = 0.0;
  for (Index j = 0; j < r; ++j) total += rotated.row(j).squaredNorm() / s.values(j);
  return total;
}

}  // namespace cqcovert
