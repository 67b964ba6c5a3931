#pragma once

#include <limits>
#include <vector>

#include "cqcovert/operator.hpp"

namespace cqcovert {

// Support containment threshold: supp(rho) is inside supp(sigma) when
// Tr{(I - P_sigma) rho} <= kSupportTolerance.
inline constexpr double kSupportTolerance = 1e-9;

// A divergence in nats. Infinite when the support condition fails; the
// infinite case is a value, not an error, so callers can branch on it.
struct DivergenceValue {
  double value = 0.0;
  bool finite = true;

  static DivergenceValue infinite() {
    return {std::numeric_limits<double>::infinity(), false};
  }
  static DivergenceValue of(double v);  // clips (-1e-9, 0) to 0
};

// Probability vector: nonnegative, sums to 1 within 1e-12.
class EnsembleDistribution {
 public:
  explicit EnsembleDistribution(RealVector probs);
  static EnsembleDistribution uniform(Index k);

  Index size() const { return p_.size(); }
  double operator[](Index i) const { return p_(i); }
  const RealVector& probs() const { return p_; }

 private:
  RealVector p_;
};

// Tr{(I - P_sigma) rho}: the weight of rho outside supp(sigma).
double support_leakage(const DensityOperator& rho, const DensityOperator& sigma);
bool support_contained(const DensityOperator& rho, const DensityOperator& sigma);

double von_neumann_entropy(const DensityOperator& rho);

DivergenceValue relative_entropy(const DensityOperator& rho, const DensityOperator& sigma);
DivergenceValue chi_squared(const DensityOperator& rho, const DensityOperator& sigma);
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);
// Minimum equal-prior error probability of discriminating the two states.
double helstrom_error(const DensityOperator& rho, const DensityOperator& sigma);
// D(rho||sigma) - ||rho - sigma||_1^2 / 2, all in nats. Infinite when D is.
double pinsker_gap(const DensityOperator& rho, const DensityOperator& sigma);

double holevo_information(const EnsembleDistribution& p,
                          const std::vector<DensityOperator>& states);

// Mixture sum_x p(x) states[x].
DensityOperator mixture(const EnsembleDistribution& p, const std::vector<DensityOperator>& states);

struct ValueAndDerivative {
  double value;
  double derivative;
};

// phi(r) = -log Tr{s1 s0^{r/2} s1^{-r} s0^{r/2}} and its closed-form
// derivative in r. Throws SupportViolation unless supp(s1) is in supp(s0).
ValueAndDerivative phi_functional(const DensityOperator& sigma1, const DensityOperator& sigma0,
                                  double r);
// psi(r) = log Tr{r1^{1+r} r0^{-r}} and its derivative.
ValueAndDerivative psi_functional(const DensityOperator& rho1, const DensityOperator& rho0,
                                  double r);

// Tr{s0^{-1} s1^2} with the pseudo-inverse on supp(s0).
double overlap_trace(const DensityOperator& sigma0, const DensityOperator& sigma1);

// Base conversion for reporting.
inline constexpr double kNatsPerBit = 0.69314718055994530942;
inline double nats_to_bits(double nats) { return nats / kNatsPerBit; }

}  // namespace cqcovert
