#include "cqcovert/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cqcovert/json_io.hpp"

namespace cqcovert {

CqChannelPair::CqChannelPair(std::vector<DensityOperator> bob, std::vector<DensityOperator> willie)
    : bob_(std::move(bob)), willie_(std::move(willie)) {
  if (bob_.empty() || willie_.empty()) {
    throw Error(ErrorKind::ValidationError, "channel needs at least the innocent symbol 0");
  }
  if (bob_.size() != willie_.size()) {
    throw Error(ErrorKind::ValidationError, "bob and willie alphabets differ in size");
  }
  for (std::size_t x = 0; x < bob_.size(); ++x) {
    if (bob_[x].dim() != bob_.front().dim()) {
      throw Error(ErrorKind::ValidationError, "bob state " + std::to_string(x) + " has a different dimension");
    }
    if (willie_[x].dim() != willie_.front().dim()) {
      throw Error(ErrorKind::ValidationError,
                  "willie state " + std::to_string(x) + " has a different dimension");
    }
  }
}

namespace {

std::vector<DensityOperator> load_states(const nlohmann::json& spec, const char* side) {
  if (!spec.contains(side)) throw Error(ErrorKind::ParseError, std::string("missing field '") + side + "'");
  const auto& arr = spec[side];
  if (!arr.is_array()) throw Error(ErrorKind::ParseError, std::string("field '") + side + "' must be an array");
  if (arr.empty()) {
    throw Error(ErrorKind::ParseError,
                std::string("field '") + side + "' is missing the innocent symbol at index 0");
  }
  std::vector<DensityOperator> out;
  for (std::size_t x = 0; x < arr.size(); ++x) {
    Matrix m;
    try {
      m = matrix_from_json(arr[x]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError,
                  std::string(side) + "[" + std::to_string(x) + "]: " + e.what());
    }
    try {
      out.push_back(make_density(m));
    } catch (const Error& e) {
      throw Error(ErrorKind::ValidationError,
                  std::string(side) + " symbol " + std::to_string(x) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

CqChannelPair load_channel(const nlohmann::json& spec) {
  if (!spec.is_object()) throw Error(ErrorKind::ParseError, "channel spec must be a JSON object");
  if (spec.contains("innocent") && spec["innocent"] != 0) {
    throw Error(ErrorKind::ParseError, "field 'innocent' must be 0");
  }
  auto bob = load_states(spec, "bob");
  auto willie = load_states(spec, "willie");
  if (bob.size() != willie.size()) {
    throw Error(ErrorKind::ParseError, "fields 'bob' and 'willie' list different alphabet sizes");
  }
  return CqChannelPair(std::move(bob), std::move(willie));
}

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

}  // namespace

CqChannelPair load_channel_file(const std::string& path) { return load_channel(read_json_file(path)); }

nlohmann::json channel_to_json(const CqChannelPair& channel) {
  nlohmann::json bob = nlohmann::json::array(), willie = nlohmann::json::array();
  for (const auto& s : channel.bob()) bob.push_back(matrix_to_json(s.matrix()));
  for (const auto& s : channel.willie()) willie.push_back(matrix_to_json(s.matrix()));
  return {{"bob", bob}, {"willie", willie}};
}

// ---------------------------------------------------------------------------
// Support relations

const char* to_string(SupportRelation r) {
  switch (r) {
    case SupportRelation::Contained: return "Contained";
    case SupportRelation::Overlapping: return "Overlapping";
    case SupportRelation::Disjoint: return "Disjoint";
  }
  return "?";
}

SupportRelation support_relation(const DensityOperator& state, const DensityOperator& innocent) {
  double outside = support_leakage(state, innocent);
  if (outside <= kSupportTolerance) return SupportRelation::Contained;
  if (1.0 - outside <= kSupportTolerance) return SupportRelation::Disjoint;
  return SupportRelation::Overlapping;
}

std::vector<SupportRow> support_relations(const CqChannelPair& channel) {
  std::vector<SupportRow> rows;
  for (int x = 1; x < channel.alphabet_size(); ++x) {
    rows.push_back({x, support_relation(channel.bob(x), channel.bob(0)),
                    support_relation(channel.willie(x), channel.willie(0))});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Mixture feasibility

RealVector nnls(const Eigen::MatrixXd& a, const RealVector& b) {
  const Index n = a.cols();
  RealVector x = RealVector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()) * static_cast<double>(std::max<Index>(n, 1));

  auto solve_passive = [&](RealVector& s) {
    std::vector<Index> idx;
    for (Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd ap(a.rows(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Index>(k)) = a.col(idx[k]);
    RealVector sp = ap.completeOrthogonalDecomposition().solve(b);
    s.setZero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(static_cast<Index>(k));
  };

  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    RealVector w = a.transpose() * (b - a * x);
    Index best = -1;
    double wmax = tol;
    for (Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    RealVector s;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      solve_passive(s);
      bool all_positive = true;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) all_positive = false;
      if (all_positive) break;
      double alpha = 1.0;
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          alpha = std::min(alpha, x(j) / (x(j) - s(j)));
        }
      }
      x += alpha * (s - x);
      for (Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
    x = s.cwiseMax(0.0);
  }
  return x;
}

namespace {

// Real coordinates of a Hermitian matrix that preserve the Frobenius norm:
// diagonal entries, then sqrt(2) Re and sqrt(2) Im of the strict upper part.
RealVector hermitian_coordinates(const Matrix& m) {
  const Index d = m.rows();
  RealVector v(d * d);
  Index k = 0;
  for (Index i = 0; i < d; ++i) v(k++) = m(i, i).real();
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) {
      v(k++) = std::sqrt(2.0) * m(i, j).real();
      v(k++) = std::sqrt(2.0) * m(i, j).imag();
    }
  }
  return v;
}

}  // namespace

MixtureResult mixture_feasibility(const DensityOperator& rho0,
                                  const std::vector<DensityOperator>& non_innocent) {
  MixtureResult out;
  if (non_innocent.empty()) {
    out.residual = std::numeric_limits<double>::infinity();
    return out;
  }
  const Index d = rho0.dim();
  Eigen::MatrixXd a(d * d, static_cast<Index>(non_innocent.size()));
  for (std::size_t x = 0; x < non_innocent.size(); ++x) {
    if (non_innocent[x].dim() != d) throw Error(ErrorKind::DimensionMismatch, "mixture_feasibility");
    a.col(static_cast<Index>(x)) = hermitian_coordinates(non_innocent[x].matrix());
  }
  RealVector b = hermitian_coordinates(rho0.matrix());
  RealVector pi = nnls(a, b);
  out.residual = (a * pi - b).norm();
  out.feasible = out.residual <= kMixtureTolerance && pi.sum() > 0.0;
  if (out.feasible) {
    RealVector normalized = pi / pi.sum();
    normalized /= normalized.sum();
    out.pi = EnsembleDistribution(normalized);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification

const char* to_string(ScenarioClass c) {
  switch (c) {
    case ScenarioClass::NoGo: return "NoGo";
    case ScenarioClass::ConstantBits: return "ConstantBits";
    case ScenarioClass::LogLaw: return "LogLaw";
    case ScenarioClass::SquareRootLaw: return "SquareRootLaw";
    case ScenarioClass::SqrtNLogN: return "SqrtNLogN";
    case ScenarioClass::ConstantRate: return "ConstantRate";
  }
  return "?";
}

const char* to_string(WeakRefinement r) {
  switch (r) {
    case WeakRefinement::ZeroBits: return "ZeroBits";
    case WeakRefinement::ConstantBits: return "ConstantBits";
    case WeakRefinement::LogLaw: return "LogLaw";
    case WeakRefinement::UnresolvedByTheory: return "UnresolvedByTheory";
  }
  return "?";
}

ScenarioReport classify_scenario(const CqChannelPair& channel) {
  ScenarioReport rep;
  rep.relations = support_relations(channel);
  const int n_symbols = channel.alphabet_size();

  for (const auto& row : rep.relations) {
    if (row.willie == SupportRelation::Contained) rep.admissible.push_back(row.symbol);
    if (row.bob == SupportRelation::Disjoint) rep.bob_disjoint_symbols.push_back(row.symbol);
  }
  for (int x = 1; x < n_symbols; ++x) {
    for (int y = x + 1; y < n_symbols; ++y) {
      if (support_relation(channel.bob(y), channel.bob(x)) == SupportRelation::Disjoint) {
        rep.bob_disjoint_pairs.emplace_back(x, y);
      }
    }
  }

  if (rep.admissible.empty()) {
    rep.scenario = ScenarioClass::NoGo;
    rep.mixture.residual = std::numeric_limits<double>::infinity();
    if (!rep.bob_disjoint_symbols.empty()) rep.weak_refinements.push_back(WeakRefinement::LogLaw);
    if (!rep.bob_disjoint_pairs.empty()) rep.weak_refinements.push_back(WeakRefinement::ConstantBits);
    if (rep.weak_refinements.empty()) {
      bool bob_contained = std::all_of(rep.relations.begin(), rep.relations.end(), [](const SupportRow& r) {
        return r.bob == SupportRelation::Contained;
      });
      rep.weak_refinements.push_back(bob_contained ? WeakRefinement::ZeroBits
                                                   : WeakRefinement::UnresolvedByTheory);
    }
    return rep;
  }

  std::vector<DensityOperator> sub;
  for (int x : rep.admissible) sub.push_back(channel.willie(x));
  rep.mixture = mixture_feasibility(channel.willie(0), sub);
  rep.mixture_symbols = rep.admissible;
  for (const auto& row : rep.relations) {
    if (row.willie == SupportRelation::Contained && row.bob != SupportRelation::Contained) {
      rep.leaking_symbols.push_back(row.symbol);
    }
  }

  if (rep.mixture.feasible) {
    rep.scenario = ScenarioClass::ConstantRate;
    std::vector<DensityOperator> bob_sub;
    for (int x : rep.admissible) bob_sub.push_back(channel.bob(x));
    DensityOperator bob_mix = mixture(*rep.mixture.pi, bob_sub);
    rep.mixture_reproduces_bob_innocent =
        (bob_mix.matrix() - channel.bob(0).matrix()).norm() <= kMixtureTolerance;
  } else if (!rep.leaking_symbols.empty()) {
    rep.scenario = ScenarioClass::SqrtNLogN;
  } else {
    rep.scenario = ScenarioClass::SquareRootLaw;
  }
  return rep;
}

nlohmann::json report_to_json(const ScenarioReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.relations) {
    rows.push_back({{"symbol", r.symbol}, {"bob", to_string(r.bob)}, {"willie", to_string(r.willie)}});
  }
  nlohmann::json j;
  j["class"] = to_string(rep.scenario);
  j["relations"] = rows;
  j["admissible_symbols"] = rep.admissible;
  nlohmann::json mix;
  mix["feasible"] = rep.mixture.feasible;
  mix["residual"] = std::isfinite(rep.mixture.residual) ? nlohmann::json(rep.mixture.residual)
                                                        : nlohmann::json(nullptr);
  mix["symbols"] = rep.mixture_symbols;
  if (rep.mixture.pi) {
    std::vector<double> pi(rep.mixture.pi->probs().data(),
                           rep.mixture.pi->probs().data() + rep.mixture.pi->size());
    mix["pi"] = pi;
    mix["reproduces_bob_innocent"] = rep.mixture_reproduces_bob_innocent;
  }
  j["mixture"] = mix;
  j["leaking_symbols"] = rep.leaking_symbols;
  j["bob_disjoint_symbols"] = rep.bob_disjoint_symbols;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : rep.bob_disjoint_pairs) pairs.push_back({a, b});
  j["bob_disjoint_pairs"] = pairs;
  nlohmann::json weak = nlohmann::json::array();
  for (auto w : rep.weak_refinements) weak.push_back(to_string(w));
  j["weak_covert_refinements"] = weak;
  return j;
}

// ---------------------------------------------------------------------------
// POVMs and induced classical channels

Povm::Povm(std::vector<HermitianMatrix> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw Error(ErrorKind::InvalidPovm, "POVM needs at least one element");
  const Index d = elements_.front().dim();
  Matrix sum = Matrix::Zero(d, d);
  for (std::size_t y = 0; y < elements_.size(); ++y) {
    if (elements_[y].dim() != d) throw Error(ErrorKind::InvalidPovm, "POVM element dimensions differ");
    double min_eig = eigh(elements_[y]).values(d - 1);
    if (min_eig < -kPsdTolerance) {
      throw Error(ErrorKind::InvalidPovm, "element " + std::to_string(y) + " is not PSD");
    }
    sum += elements_[y].matrix();
  }
  double err = (sum - Matrix::Identity(d, d)).norm();
  if (err > 1e-9) {
    std::ostringstream os;
    os << "elements sum to identity only within " << err;
    throw Error(ErrorKind::InvalidPovm, os.str());
  }
}

Povm Povm::computational_basis(Index dim) {
  std::vector<HermitianMatrix> e;
  for (Index i = 0; i < dim; ++i) {
    RealVector v = RealVector::Zero(dim);
    v(i) = 1.0;
    e.push_back(HermitianMatrix::diagonal(v));
  }
  return Povm(std::move(e));
}

Povm load_povm(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("elements") || !spec["elements"].is_array()) {
    throw Error(ErrorKind::ParseError, "POVM spec needs an 'elements' array");
  }
  std::vector<HermitianMatrix> e;
  for (std::size_t y = 0; y < spec["elements"].size(); ++y) {
    try {
      e.emplace_back(matrix_from_json(spec["elements"][y]));
    } catch (const Error& err) {
      throw Error(ErrorKind::ParseError, "elements[" + std::to_string(y) + "]: " + err.what());
    }
  }
  return Povm(std::move(e));
}

Povm load_povm_file(const std::string& path) { return load_povm(read_json_file(path)); }

Eigen::MatrixXd induce_dmc(const std::vector<DensityOperator>& states, const Povm& povm) {
  Eigen::MatrixXd p(static_cast<Index>(states.size()), static_cast<Index>(povm.size()));
  for (std::size_t x = 0; x < states.size(); ++x) {
    if (states[x].dim() != povm.dim()) throw Error(ErrorKind::DimensionMismatch, "induce_dmc");
    for (std::size_t y = 0; y < povm.size(); ++y) {
      double v = trace_product(states[x].matrix(), povm.elements()[y].matrix());
      if (v < 0.0 && v >= -1e-12) v = 0.0;
      p(static_cast<Index>(x), static_cast<Index>(y)) = v;
    }
  }
  return p;
}

WeakCovertBudget weak_covert_budget(const CqChannelPair& channel, double epsilon0) {
  if (!(epsilon0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon0 must be positive");
  WeakCovertBudget best{0.0, -1, 0.0};
  for (int x = 1; x < channel.alphabet_size(); ++x) {
    double t = trace_distance(channel.willie(x), channel.willie(0));
    if (t > best.distance) {
      best.distance = t;
      best.xstar = x;
    }
  }
  if (best.xstar < 0 || best.distance <= 1e-12) {
    throw Error(ErrorKind::DegenerateChannel,
                "every non-innocent Willie state equals rho0; the budget is unbounded");
  }
  best.average_symbols = 4.0 * epsilon0 / best.distance;
  return best;
}

}  // namespace cqcovert
