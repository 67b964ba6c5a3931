#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqcovert/channel.hpp"
#include "cqcovert/divergence.hpp"

namespace cqcovert {

// ptilde is indexed over the non-innocent symbols (entry x-1 for symbol x).
struct ScalingReport {
  double message_coeff = 0.0;
  double key_coeff = 0.0;
  double key_raw = 0.0;  // numerator before the [.]^+ clamp, per sqrt(chi2/2)
  double chi2 = 0.0;     // chi^2(rho-tilde || rho0)
  EnsembleDistribution ptilde = EnsembleDistribution::uniform(1);
  ScenarioClass regime = ScenarioClass::SquareRootLaw;
  std::optional<double> kappa;
  std::optional<double> leading_constant;  // kappa / (2 sqrt(chi2/2))
  std::string expression;
};

double message_coefficient(const CqChannelPair& channel, const EnsembleDistribution& ptilde);
double key_coefficient(const CqChannelPair& channel, const EnsembleDistribution& ptilde);
ScalingReport square_root_coefficients(const CqChannelPair& channel, const EnsembleDistribution& ptilde);

// Bob restricted to a fixed symbol-by-symbol measurement.
ScalingReport product_measurement_coefficients(const CqChannelPair& channel, const Povm& povm,
                                               const EnsembleDistribution& ptilde);

ScalingReport sqrtnlogn_coefficient(const CqChannelPair& channel, const EnsembleDistribution& ptilde);

enum class Objective { MaxMessage, MinKey, Weighted };
struct ObjectiveSpec {
  Objective kind = Objective::MaxMessage;
  double weight = 1.0;  // Weighted: message - weight * key
};
ObjectiveSpec parse_objective(const std::string& text);  // max-message | min-key | weighted:<w>

struct OptimizerStep {
  int restart;
  int iterations;
  double value;
};

struct OptimizeResult {
  EnsembleDistribution ptilde = EnsembleDistribution::uniform(1);
  double value = 0.0;  // objective, maximized (MinKey maximizes -key)
  ScalingReport report;
  std::vector<OptimizerStep> trace;
  std::optional<double> grid_value;  // 1e-3 grid optimum when <= 3 admissible symbols
};

OptimizeResult optimize_ptilde(const CqChannelPair& channel, const ObjectiveSpec& objective,
                               std::uint64_t seed = 1, int restarts = 20);
double objective_value(const CqChannelPair& channel, const ObjectiveSpec& objective,
                       const EnsembleDistribution& ptilde);

struct ConverseBounds {
  double holevo_bob;     // chi(p-bar, sigma)
  double holevo_willie;  // chi(p-bar, rho)
  double log_m_upper;         // (n chi_B + 1) / (1 - delta)
  double log_mk_lower;        // n chi_W - epsilon
  double bob_linear;          // mu sum ptilde D(sigma_x||sigma0) - D(sigma_mu||sigma0)
  double bob_loose;           // mu sum ptilde D(sigma_x||sigma0)
  double willie_linear;
  double willie_loose;
};

ConverseBounds converse_bounds(const CqChannelPair& channel, const EnsembleDistribution& ptilde, double mu,
                               int n, double delta, double epsilon);

struct ExpansionRow {
  double alpha;
  double divergence;
  double leading;   // alpha^2 chi2 / 2
  double residual;  // |divergence - leading|
  double residual_exact;  // |divergence - alpha^2 kubo_mori / 2|
};

struct ExpansionCheck {
  double radius;  // 1 / ||B^+ (C - B)||_op
  double chi2;
  std::vector<ExpansionRow> rows;
  double slope;  // least-squares log-log slope of the residual over alpha > 0
  // True second derivative of D(A||B) at alpha = 0 (Kubo-Mori metric of C - B
  // at B). Equals chi2 when B and C commute, and is smaller otherwise.
  double kubo_mori;
  double slope_exact;
};

ExpansionCheck expansion_check(const DensityOperator& b, const DensityOperator& c,
                                      const std::vector<double>& alphas);

double kubo_mori_metric(const DensityOperator& b, const DensityOperator& c);

nlohmann::json scaling_to_json(const ScalingReport& r, bool bits);

}  // namespace cqcovert
