#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqcovert/divergence.hpp"
#include "cqcovert/operator.hpp"

namespace cqcovert {

// Classical-quantum channel pair x -> (sigma_x at Bob, rho_x at Willie).
// Symbol 0 is the innocent symbol.
class CqChannelPair {
 public:
  CqChannelPair(std::vector<DensityOperator> bob, std::vector<DensityOperator> willie);

  int alphabet_size() const { return static_cast<int>(bob_.size()); }
  Index bob_dim() const { return bob_.front().dim(); }
  Index willie_dim() const { return willie_.front().dim(); }
  const std::vector<DensityOperator>& bob() const { return bob_; }
  const std::vector<DensityOperator>& willie() const { return willie_; }
  const DensityOperator& bob(int x) const { return bob_.at(static_cast<std::size_t>(x)); }
  const DensityOperator& willie(int x) const { return willie_.at(static_cast<std::size_t>(x)); }

 private:
  std::vector<DensityOperator> bob_;
  std::vector<DensityOperator> willie_;
};

// Channel spec: {"bob": [matrix, ...], "willie": [matrix, ...]} with entry 0
// the innocent symbol. An optional "innocent" field must equal 0.
CqChannelPair load_channel(const nlohmann::json& spec);
CqChannelPair load_channel_file(const std::string& path);
nlohmann::json channel_to_json(const CqChannelPair& channel);

enum class SupportRelation { Contained, Overlapping, Disjoint };
const char* to_string(SupportRelation r);

// Contained iff Tr{(I - P0) state} <= 1e-9; Disjoint iff Tr{P0 state} <= 1e-9.
SupportRelation support_relation(const DensityOperator& state, const DensityOperator& innocent);

struct SupportRow {
  int symbol;
  SupportRelation bob;
  SupportRelation willie;
};
std::vector<SupportRow> support_relations(const CqChannelPair& channel);

// Lawson-Hanson nonnegative least squares: argmin ||A x - b|| s.t. x >= 0.
RealVector nnls(const Eigen::MatrixXd& a, const RealVector& b);

struct MixtureResult {
  bool feasible = false;
  double residual = 0.0;                   // ||sum pi_x rho_x - rho0||_F at the NNLS optimum
  std::optional<EnsembleDistribution> pi;  // witness when feasible
};

inline constexpr double kMixtureTolerance = 1e-8;

MixtureResult mixture_feasibility(const DensityOperator& rho0,
                                  const std::vector<DensityOperator>& non_innocent);

enum class ScenarioClass { NoGo, ConstantBits, LogLaw, SquareRootLaw, SqrtNLogN, ConstantRate };
const char* to_string(ScenarioClass c);

// What relaxed (weak) covertness allows when strict covertness is impossible.
enum class WeakRefinement { ZeroBits, ConstantBits, LogLaw, UnresolvedByTheory };
const char* to_string(WeakRefinement r);

struct ScenarioReport {
  ScenarioClass scenario;
  std::vector<SupportRow> relations;
  // Non-innocent symbols whose Willie support lies inside supp(rho0).
  std::vector<int> admissible;
  MixtureResult mixture;
  std::vector<int> mixture_symbols;  // indices the witness pi refers to
  // For ConstantRate: whether the witness also reproduces sigma0 at Bob.
  bool mixture_reproduces_bob_innocent = false;
  // Admissible symbols whose Bob support leaks outside supp(sigma0).
  std::vector<int> leaking_symbols;
  std::vector<int> bob_disjoint_symbols;
  std::vector<std::pair<int, int>> bob_disjoint_pairs;
  std::vector<WeakRefinement> weak_refinements;  // only for NoGo
};

ScenarioReport classify_scenario(const CqChannelPair& channel);
nlohmann::json report_to_json(const ScenarioReport& report);

// Measurement {Pi_y}: PSD elements summing to the identity.
class Povm {
 public:
  explicit Povm(std::vector<HermitianMatrix> elements);
  static Povm computational_basis(Index dim);

  Index dim() const { return elements_.front().dim(); }
  std::size_t size() const { return elements_.size(); }
  const std::vector<HermitianMatrix>& elements() const { return elements_; }

 private:
  std::vector<HermitianMatrix> elements_;
};

// {"elements": [matrix, ...]}
Povm load_povm(const nlohmann::json& spec);
Povm load_povm_file(const std::string& path);

// p(y|x) = Tr{state_x Pi_y}; rows indexed by x.
Eigen::MatrixXd induce_dmc(const std::vector<DensityOperator>& states, const Povm& povm);

struct WeakCovertBudget {
  double average_symbols;  // L-bar
  int xstar;
  double distance;  // ||rho_{x*} - rho0||_1
};

WeakCovertBudget weak_covert_budget(const CqChannelPair& channel, double epsilon0);

}  // namespace cqcovert
