#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cqcovert/json_io.hpp"
#include "cqcovert/random.hpp"
#include "fixtures.hpp"

using namespace cqcovert;
using fixtures::diag_state;
using fixtures::pure_state;

namespace {

DensityOperator conjugate(const DensityOperator& s, const Matrix& u) {
  return DensityOperator(HermitianMatrix::symmetrized(u * s.matrix() * u.adjoint()));
}

CqChannelPair conjugate(const CqChannelPair& c, const Matrix& ub, const Matrix& uw) {
  std::vector<DensityOperator> b, w;
  for (const auto& s : c.bob()) b.push_back(conjugate(s, ub));
  for (const auto& s : c.willie()) w.push_back(conjugate(s, uw));
  return CqChannelPair(b, w);
}

// Smallest Frobenius residual over a grid on the simplex (two or three weights).
double grid_residual(const DensityOperator& rho0, const std::vector<DensityOperator>& states, double step) {
  const int steps = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  if (states.size() == 2) {
    for (int i = 0; i <= steps; ++i) {
      double a = i * step;
      best = std::min(best, (a * states[0].matrix() + (1 - a) * states[1].matrix() - rho0.matrix()).norm());
    }
  } else {
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; i + j <= steps; ++j) {
        double a = i * step, b = j * step, c = std::max(0.0, 1.0 - a - b);
        Matrix m = a * states[0].matrix() + b * states[1].matrix() + c * states[2].matrix();
        best = std::min(best, (m - rho0.matrix()).norm());
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("load_channel") {
  nlohmann::json spec = {
      {"bob", {matrix_to_json(diag_state({0.9, 0.1}).matrix()), matrix_to_json(diag_state({0.6, 0.4}).matrix())}},
      {"willie", {matrix_to_json(diag_state({0.9, 0.1}).matrix()), matrix_to_json(diag_state({0.6, 0.4}).matrix())}}};
  CqChannelPair c = load_channel(spec);
  CHECK(c.alphabet_size() == 2);
  CHECK(c.bob_dim() == 2);
  CHECK((c.willie(1).matrix() - diag_state({0.6, 0.4}).matrix()).norm() < 1e-15);
  CHECK(load_channel(channel_to_json(c)).alphabet_size() == 2);

  nlohmann::json empty = spec;
  empty["bob"] = nlohmann::json::array();
  CHECK_THROWS_AS(load_channel(empty), Error);
  try {
    load_channel(empty);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }

  nlohmann::json bad = spec;
  bad["willie"][1] = {{"re", {{1.0, 0.0}, {0.0, -0.1}}}};
  try {
    load_channel(bad);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ValidationError);
    CHECK(std::string(e.what()).find("symbol 1") != std::string::npos);
  }

  nlohmann::json mismatch = spec;
  mismatch["bob"][1] = matrix_to_json(diag_state({0.5, 0.25, 0.25}).matrix());
  CHECK_THROWS_AS(load_channel(mismatch), Error);
  CHECK_THROWS_AS(load_channel(nlohmann::json::array()), Error);
}

TEST_CASE("support relations") {
  DensityOperator r0 = diag_state({0.5, 0.5, 0.0});
  CHECK(support_relation(diag_state({0.2, 0.8, 0.0}), r0) == SupportRelation::Contained);
  CHECK(support_relation(diag_state({0.0, 0.0, 1.0}), r0) == SupportRelation::Disjoint);
  CHECK(support_relation(diag_state({0.25, 0.25, 0.5}), r0) == SupportRelation::Overlapping);
  CHECK(support_relation(pure_state({1.0, 0.0}), pure_state({0.0, 1.0})) == SupportRelation::Disjoint);

  auto rows = support_relations(fixtures::class_fixtures()[5].channel);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].bob == SupportRelation::Overlapping);
  CHECK(rows[0].willie == SupportRelation::Contained);
}

TEST_CASE("nnls against small direct cases") {
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 1, 0, 0;
  RealVector b(3);
  b << 2, -1, 5;
  RealVector x = nnls(a, b);
  CHECK(std::abs(x(0) - 2.0) < 1e-12);
  CHECK(x(1) == 0.0);

  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Random(6, 3);
    RealVector truth = RealVector::Random(3).cwiseAbs();
    RealVector y = m * truth;
    RealVector got = nnls(m, y);
    CHECK((got - truth).norm() < 1e-8);
  }
}

TEST_CASE("mixture_feasibility examples") {
  DensityOperator r1 = diag_state({0.8, 0.2}), r2 = diag_state({0.2, 0.8});
  MixtureResult m = mixture_feasibility(diag_state({0.5, 0.5}), {r1, r2});
  REQUIRE(m.feasible);
  CHECK(std::abs((*m.pi)[0] - 0.5) < 1e-9);
  CHECK(std::abs((*m.pi)[1] - 0.5) < 1e-9);

  MixtureResult single = mixture_feasibility(diag_state({0.5, 0.5}), {r1});
  CHECK_FALSE(single.feasible);
  CHECK(single.residual > 1e-8);
}

TEST_CASE("mixture_feasibility agrees with a simplex grid") {
  Rng rng(11);
  int feasible_seen = 0, infeasible_seen = 0;
  for (int t = 0; t < 40; ++t) {
    std::size_t k = 2 + static_cast<std::size_t>(t % 2);
    std::vector<DensityOperator> states;
    for (std::size_t i = 0; i < k; ++i) states.push_back(random_density(2, rng));
    DensityOperator rho0 = random_density(2, rng);
    if (t % 4 == 0) rho0 = mixture(EnsembleDistribution(random_probability(static_cast<Index>(k), rng)), states);

    MixtureResult m = mixture_feasibility(rho0, states);
    if (m.feasible) {
      ++feasible_seen;
      REQUIRE(m.pi);
      CHECK((mixture(*m.pi, states).matrix() - rho0.matrix()).norm() <= 1e-8);
    } else {
      ++infeasible_seen;
      CHECK(m.residual > 1e-8);
      CHECK(grid_residual(rho0, states, 1e-3) > 1e-9);
    }
  }
  CHECK(feasible_seen >= 10);
  CHECK(infeasible_seen >= 10);
}

TEST_CASE("classification fixtures") {
  for (const auto& f : fixtures::class_fixtures()) {
    CAPTURE(f.name);
    ScenarioReport rep = classify_scenario(f.channel);
    CHECK(rep.scenario == f.expected);
    if (f.expected == ScenarioClass::NoGo) {
      CHECK(rep.weak_refinements == f.refinements);
      CHECK(rep.admissible.empty());
    } else {
      CHECK(rep.weak_refinements.empty());
    }
    if (f.expected == ScenarioClass::ConstantRate) {
      REQUIRE(rep.mixture.pi);
      std::vector<DensityOperator> sub;
      for (int x : rep.mixture_symbols) sub.push_back(f.channel.willie(x));
      CHECK((mixture(*rep.mixture.pi, sub).matrix() - f.channel.willie(0).matrix()).norm() <= 1e-8);
    }
    if (f.expected == ScenarioClass::SqrtNLogN) CHECK_FALSE(rep.leaking_symbols.empty());
    nlohmann::json j = report_to_json(rep);
    CHECK(j["class"] == to_string(f.expected));
  }
  // A bob-leaking channel whose leaking symbol also has Willie leakage, plus
  // a contained one: only the admissible symbol decides.
  CqChannelPair mixed({diag_state({1.0, 0.0}), diag_state({0.5, 0.5}), diag_state({0.7, 0.3})},
                      {diag_state({1.0, 0.0}), diag_state({0.5, 0.5}), diag_state({1.0, 0.0})});
  ScenarioReport rep = classify_scenario(mixed);
  CHECK(rep.scenario == ScenarioClass::ConstantRate);
  CHECK(rep.admissible == std::vector<int>{2});
}

TEST_CASE("classification is invariant under unitary conjugation") {
  Rng rng(12);
  for (const auto& f : fixtures::class_fixtures()) {
    CAPTURE(f.name);
    for (int t = 0; t < 50; ++t) {
      Matrix ub = random_unitary(f.channel.bob_dim(), rng);
      Matrix uw = random_unitary(f.channel.willie_dim(), rng);
      ScenarioReport rep = classify_scenario(conjugate(f.channel, ub, uw));
      CHECK(rep.scenario == f.expected);
      if (f.expected == ScenarioClass::NoGo) CHECK(rep.weak_refinements == f.refinements);
    }
  }
}

TEST_CASE("induce_dmc") {
  std::vector<DensityOperator> states{diag_state({0.9, 0.1}), diag_state({0.6, 0.4})};
  Eigen::MatrixXd p = induce_dmc(states, Povm::computational_basis(2));
  CHECK(std::abs(p(0, 0) - 0.9) < 1e-15);
  CHECK(std::abs(p(1, 1) - 0.4) < 1e-15);

  Eigen::MatrixXd ones = induce_dmc(states, Povm({HermitianMatrix::identity(2)}));
  CHECK(ones.cols() == 1);
  CHECK((ones.array() - 1.0).abs().maxCoeff() < 1e-15);

  // {P0, I - P0} on a leaking state.
  DensityOperator s0 = pure_state({1.0, Complex(0.0, 1.0)});
  DensityOperator leak = diag_state({0.3, 0.7});
  Matrix p0 = s0.matrix();
  Povm pm({HermitianMatrix(p0), HermitianMatrix(Matrix::Identity(2, 2) - p0)});
  Eigen::MatrixXd q = induce_dmc({leak}, pm);
  double direct = (p0 * leak.matrix()).trace().real();
  CHECK(std::abs(q(0, 0) - direct) < 1e-14);
  CHECK(std::abs(q(0, 1) - (1 - direct)) < 1e-14);

  CHECK_THROWS_AS(induce_dmc({diag_state({0.5, 0.25, 0.25})}, Povm::computational_basis(2)), Error);
  CHECK_THROWS_AS(Povm({HermitianMatrix::identity(2) * 0.5}), Error);
  CHECK_THROWS_AS(Povm({HermitianMatrix::diagonal(RealVector::Constant(2, 1.5)),
                        HermitianMatrix::diagonal(RealVector::Constant(2, -0.5))}),
                  Error);

  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    Index d = 2 + t % 3;
    // Random POVM: G^{-1/2} A_y G^{-1/2} with G = sum A_y.
    std::vector<Matrix> raw;
    Matrix g = Matrix::Zero(d, d);
    for (int y = 0; y < 3; ++y) {
      raw.push_back(random_positive_definite(d, rng).matrix());
      g += raw.back();
    }
    Matrix gi = matrix_function(HermitianMatrix::symmetrized(g), fn::SqrtPinv{}).matrix();
    std::vector<HermitianMatrix> el;
    for (const auto& a : raw) el.push_back(HermitianMatrix::symmetrized(gi * a * gi));
    std::vector<DensityOperator> st{random_density(d, rng), random_density(d, rng, 1)};
    Eigen::MatrixXd pp = induce_dmc(st, Povm(el));
    CHECK(pp.minCoeff() >= 0.0);
    CHECK((pp.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("weak_covert_budget") {
  CqChannelPair c = fixtures::canonical_qubit();
  WeakCovertBudget b = weak_covert_budget(c, 0.09);
  CHECK(b.xstar == 1);
  CHECK(std::abs(b.average_symbols - 4 * 0.09 / trace_distance(c.willie(1), c.willie(0))) < 1e-12);
  CHECK(std::abs(b.average_symbols - 0.6) < 1e-12);
  CHECK(weak_covert_budget(c, 1e-12).average_symbols < 1e-11);

  CqChannelPair two({diag_state({0.9, 0.1}), diag_state({0.6, 0.4}), diag_state({0.5, 0.5})},
                    {diag_state({0.5, 0.5}), diag_state({0.8, 0.2}), diag_state({0.9, 0.1})});
  CHECK(weak_covert_budget(two, 0.1).xstar == 2);
  CHECK(std::abs(weak_covert_budget(two, 0.1).distance - 0.8) < 1e-12);

  CqChannelPair flat({diag_state({0.9, 0.1}), diag_state({0.6, 0.4})},
                     {diag_state({0.5, 0.5}), diag_state({0.5, 0.5})});
  try {
    weak_covert_budget(flat, 0.1);
    FAIL("expected DegenerateChannel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateChannel);
  }
}

TEST_CASE("square-root-law channels have positive chi-squared on the simplex interior") {
  Rng rng(14);
  int checked = 0;
  for (int t = 0; t < 30; ++t) {
    std::vector<DensityOperator> w{random_full_rank_density(2, rng), random_full_rank_density(2, rng),
                                   random_full_rank_density(2, rng)};
    CqChannelPair c(w, w);
    if (classify_scenario(c).scenario != ScenarioClass::SquareRootLaw) continue;
    ++checked;
    for (int i = 1; i < 50; ++i) {
      double a = i / 50.0;
      RealVector p(2);
      p << a, 1 - a;
      DensityOperator tilde = mixture(EnsembleDistribution(p), {w[1], w[2]});
      CHECK(chi_squared(tilde, w[0]).value > 0.0);
    }
  }
  CHECK(checked >= 5);
  CqChannelPair canon = fixtures::canonical_qubit();
  CHECK(std::abs(chi_squared(canon.willie(1), canon.willie(0)).value - 1.0) < 1e-9);
}
