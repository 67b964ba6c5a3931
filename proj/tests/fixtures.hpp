#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "cqcovert/channel.hpp"

namespace fixtures {

using namespace cqcovert;

inline DensityOperator diag_state(std::initializer_list<double> v) {
  RealVector d(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) d(i++) = x;
  return DensityOperator(HermitianMatrix::diagonal(d));
}

inline DensityOperator pure_state(std::initializer_list<Complex> v) {
  Vector psi(static_cast<Index>(v.size()));
  Index i = 0;
  for (Complex x : v) psi(i++) = x;
  psi.normalize();
  return DensityOperator(HermitianMatrix::symmetrized(psi * psi.adjoint()));
}

// sigma0 = rho0 = diag(0.9, 0.1), sigma1 = rho1 = diag(0.6, 0.4).
inline CqChannelPair canonical_qubit() {
  return CqChannelPair({diag_state({0.9, 0.1}), diag_state({0.6, 0.4})},
                       {diag_state({0.9, 0.1}), diag_state({0.6, 0.4})});
}

struct ClassFixture {
  std::string name;
  CqChannelPair channel;
  ScenarioClass expected;
  std::vector<WeakRefinement> refinements;  // only checked for NoGo
};

inline std::vector<ClassFixture> class_fixtures() {
  const double h = 1.0 / std::sqrt(2.0);
  std::vector<ClassFixture> out;
  // Willie sees every non-innocent symbol outside supp(rho0).
  auto nogo_willie = [](std::size_t k) {
    std::vector<DensityOperator> w{diag_state({1.0, 0.0})};
    for (std::size_t i = 0; i < k; ++i) w.push_back(diag_state({0.5, 0.5}));
    return w;
  };
  out.push_back({"nogo-bob-contained",
                 CqChannelPair({diag_state({0.9, 0.1}), diag_state({0.6, 0.4})}, nogo_willie(1)),
                 ScenarioClass::NoGo,
                 {WeakRefinement::ZeroBits}});
  out.push_back({"nogo-disjoint-pair",
                 CqChannelPair({diag_state({1.0, 0.0}), pure_state({h, h}), pure_state({h, -h})},
                               nogo_willie(2)),
                 ScenarioClass::NoGo,
                 {WeakRefinement::ConstantBits}});
  out.push_back({"nogo-bob-disjoint",
                 CqChannelPair({diag_state({1.0, 0.0}), diag_state({0.0, 1.0})}, nogo_willie(1)),
                 ScenarioClass::NoGo,
                 {WeakRefinement::LogLaw}});
  out.push_back({"nogo-unresolved",
                 CqChannelPair({diag_state({1.0, 0.0}), diag_state({0.5, 0.5})}, nogo_willie(1)),
                 ScenarioClass::NoGo,
                 {WeakRefinement::UnresolvedByTheory}});
  out.push_back({"square-root", canonical_qubit(), ScenarioClass::SquareRootLaw, {}});
  out.push_back({"sqrt-log-overlap",
                 CqChannelPair({diag_state({1.0, 0.0}), diag_state({0.5, 0.5})},
                               {diag_state({0.9, 0.1}), diag_state({0.6, 0.4})}),
                 ScenarioClass::SqrtNLogN,
                 {}});
  out.push_back({"sqrt-log-disjoint",
                 CqChannelPair({diag_state({1.0, 0.0}), diag_state({0.0, 1.0})},
                               {diag_state({0.9, 0.1}), diag_state({0.6, 0.4})}),
                 ScenarioClass::SqrtNLogN,
                 {}});
  out.push_back({"linear-bob-contained",
                 CqChannelPair({diag_state({0.9, 0.1}), diag_state({0.6, 0.4}), diag_state({0.3, 0.7})},
                               {diag_state({0.5, 0.5}), diag_state({0.8, 0.2}), diag_state({0.2, 0.8})}),
                 ScenarioClass::ConstantRate,
                 {}});
  out.push_back({"linear-bob-leaking",
                 CqChannelPair({diag_state({1.0, 0.0}), diag_state({0.5, 0.5}), diag_state({1.0, 0.0})},
                               {diag_state({0.5, 0.5}), diag_state({0.8, 0.2}), diag_state({0.2, 0.8})}),
                 ScenarioClass::ConstantRate,
                 {}});
  return out;
}

}  // namespace fixtures
