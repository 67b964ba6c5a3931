#include "cqcovert/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "cqcovert/random.hpp"

namespace cqcovert {

namespace {

void require_alphabet(const CqChannelPair& channel, const EnsembleDistribution& ptilde) {
  if (ptilde.size() != channel.alphabet_size() - 1) {
    throw Error(ErrorKind::InvalidArgument, "ptilde must have one entry per non-innocent symbol");
  }
}

// Rejects ptilde mass on symbols the regime excludes.
void require_admissible_mass(const ScenarioReport& rep, const EnsembleDistribution& ptilde) {
  for (Index x = 0; x < ptilde.size(); ++x) {
    if (ptilde[x] <= 0.0) continue;
    int sym = static_cast<int>(x) + 1;
    if (std::find(rep.admissible.begin(), rep.admissible.end(), sym) == rep.admissible.end()) {
      throw Error(ErrorKind::WrongRegime, "ptilde puts mass on symbol " + std::to_string(sym) +
                                              " whose Willie support leaves supp(rho0)");
    }
  }
}

void require_regime(const ScenarioReport& rep, std::initializer_list<ScenarioClass> allowed) {
  for (auto c : allowed)
    if (rep.scenario == c) return;
  throw Error(ErrorKind::WrongRegime, std::string("channel is classified ") + to_string(rep.scenario));
}

DensityOperator tilde_state(const CqChannelPair& channel, const EnsembleDistribution& ptilde) {
  std::vector<DensityOperator> rest(channel.willie().begin() + 1, channel.willie().end());
  return mixture(ptilde, rest);
}

double tilde_chi2(const CqChannelPair& channel, const EnsembleDistribution& ptilde) {
  DivergenceValue c = chi_squared(tilde_state(channel, ptilde), channel.willie(0));
  if (!c.finite) throw Error(ErrorKind::WrongRegime, "rho-tilde leaves supp(rho0)");
  if (c.value <= 1e-14) {
    throw Error(ErrorKind::ZeroChiSquared, "chi^2(rho-tilde || rho0) vanishes: rho0 is reproduced by ptilde");
  }
  return c.value;
}

double weighted_divergence(const std::vector<DensityOperator>& states, const EnsembleDistribution& ptilde,
                           ErrorKind on_infinite) {
  double total = 0.0;
  for (Index x = 0; x < ptilde.size(); ++x) {
    if (ptilde[x] <= 0.0) continue;
    DivergenceValue d = relative_entropy(states[static_cast<std::size_t>(x + 1)], states.front());
    if (!d.finite) {
      throw Error(on_infinite, "symbol " + std::to_string(x + 1) + " has an infinite divergence");
    }
    total += ptilde[x] * d.value;
  }
  return total;
}

double classical_kl(const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q, int symbol) {
  double s = 0.0;
  for (Index y = 0; y < p.size(); ++y) {
    if (p(y) <= 1e-12) continue;
    if (q(y) <= 1e-12) {
      throw Error(ErrorKind::SupportViolationClassical,
                  "outcome " + std::to_string(y) + " has p(y|" + std::to_string(symbol) + ") > 0 = p(y|0)");
    }
    s += p(y) * std::log(p(y) / q(y));
  }
  return std::max(0.0, s);
}

}  // namespace

ScalingReport square_root_coefficients(const CqChannelPair& channel, const EnsembleDistribution& ptilde) {
  require_alphabet(channel, ptilde);
  ScenarioReport rep = classify_scenario(channel);
  require_regime(rep, {ScenarioClass::SquareRootLaw});
  require_admissible_mass(rep, ptilde);
  ScalingReport r;
  r.regime = rep.scenario;
  r.ptilde = ptilde;
  r.chi2 = tilde_chi2(channel, ptilde);
  double den = std::sqrt(0.5 * r.chi2);
  double db = weighted_divergence(channel.bob(), ptilde, ErrorKind::WrongRegime);
  double dw = weighted_divergence(channel.willie(), ptilde, ErrorKind::WrongRegime);
  r.message_coeff = db / den;
  r.key_raw = (dw - db) / den;
  r.key_coeff = std::max(0.0, r.key_raw);
  r.expression = "log M ~ message_coeff * sqrt(n D), log K ~ key_coeff * sqrt(n D)";
  return r;
}

double message_coefficient(const CqChannelPair& channel, const EnsembleDistribution& ptilde) {
  return square_root_coefficients(channel, ptilde).message_coeff;
}

double key_coefficient(const CqChannelPair& channel, const EnsembleDistribution& ptilde) {
  return square_root_coefficients(channel, ptilde).key_coeff;
}

ScalingReport product_measurement_coefficients(const CqChannelPair& channel, const Povm& povm,
                                               const EnsembleDistribution& ptilde) {
  require_alphabet(channel, ptilde);
  ScenarioReport rep = classify_scenario(channel);
  require_regime(rep, {ScenarioClass::SquareRootLaw, ScenarioClass::SqrtNLogN});
  require_admissible_mass(rep, ptilde);
  Eigen::MatrixXd p = induce_dmc(channel.bob(), povm);
  ScalingReport r;
  r.regime = rep.scenario;
  r.ptilde = ptilde;
  r.chi2 = tilde_chi2(channel, ptilde);
  double den = std::sqrt(0.5 * r.chi2);
  double db = 0.0;
  for (Index x = 0; x < ptilde.size(); ++x) {
    if (ptilde[x] <= 0.0) continue;
    db += ptilde[x] * classical_kl(p.row(x + 1), p.row(0), static_cast<int>(x) + 1);
  }
  double dw = weighted_divergence(channel.willie(), ptilde, ErrorKind::WrongRegime);
  r.message_coeff = db / den;
  r.key_raw = (dw - db) / den;
  r.key_coeff = std::max(0.0, r.key_raw);
  r.expression = "classical divergences of the induced channel over the quantum chi^2 at Willie";
  return r;
}

ScalingReport sqrtnlogn_coefficient(const CqChannelPair& channel, const EnsembleDistribution& ptilde) {
  require_alphabet(channel, ptilde);
  ScenarioReport rep = classify_scenario(channel);
  require_regime(rep, {ScenarioClass::SqrtNLogN});
  require_admissible_mass(rep, ptilde);
  std::vector<DensityOperator> rest(channel.bob().begin() + 1, channel.bob().end());
  DensityOperator bob_tilde = mixture(ptilde, rest);
  ScalingReport r;
  r.regime = rep.scenario;
  r.ptilde = ptilde;
  r.chi2 = tilde_chi2(channel, ptilde);
  r.kappa = std::clamp(support_leakage(bob_tilde, channel.bob(0)), 0.0, 1.0);
  r.leading_constant = *r.kappa / (2.0 * std::sqrt(0.5 * r.chi2));
  r.message_coeff = *r.leading_constant;
  r.expression =
      "log M <= kappa * (1/2 + lim log(1/iota)/log n) / sqrt(chi2/2) * sqrt(n D) log n; "
      "leading_constant keeps only the 1/2 term";
  return r;
}

// ---------------------------------------------------------------------------
// Simplex optimization

ObjectiveSpec parse_objective(const std::string& text) {
  if (text == "max-message") return {Objective::MaxMessage, 1.0};
  if (text == "min-key") return {Objective::MinKey, 1.0};
  const std::string prefix = "weighted:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      double w = std::stod(text.substr(prefix.size()), &used);
      if (used + prefix.size() == text.size() && std::isfinite(w)) return {Objective::Weighted, w};
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown objective '" + text + "' (max-message, min-key, weighted:<w>)");
}

namespace {

// Coefficients over the admissible sub-alphabet as explicit forms:
// message = a.p / sqrt(p'Qp/2), key = [b.p]^+ / sqrt(p'Qp/2).
struct QuadraticForms {
  std::vector<int> symbols;
  RealVector a, b;
  Eigen::MatrixXd q;
  ObjectiveSpec objective;

  double chi2(const RealVector& p) const { return p.dot(q * p); }

  double value(const RealVector& p) const {
    double den = std::sqrt(0.5 * std::max(chi2(p), 1e-300));
    double msg = a.dot(p) / den;
    double key = std::max(0.0, b.dot(p) / den);
    switch (objective.kind) {
      case Objective::MaxMessage: return msg;
      case Objective::MinKey: return -key;
      case Objective::Weighted: return msg - objective.weight * key;
    }
    return msg;
  }

  RealVector gradient(const RealVector& p) const {
    double c = std::max(chi2(p), 1e-300);
    double den = std::sqrt(0.5 * c);
    RealVector qp = q * p;
    auto ratio_grad = [&](const RealVector& v) -> RealVector {
      return v / den - (v.dot(p) / (2.0 * den * den * den)) * qp;
    };
    RealVector gm = ratio_grad(a);
    RealVector gk = b.dot(p) > 0.0 ? ratio_grad(b) : RealVector::Zero(p.size());
    switch (objective.kind) {
      case Objective::MaxMessage: return gm;
      case Objective::MinKey: return -gk;
      case Objective::Weighted: return gm - objective.weight * gk;
    }
    return gm;
  }
};

QuadraticForms build_forms(const CqChannelPair& channel, const ObjectiveSpec& objective) {
  ScenarioReport rep = classify_scenario(channel);
  require_regime(rep, {ScenarioClass::SquareRootLaw});
  QuadraticForms f;
  f.symbols = rep.admissible;
  f.objective = objective;
  const Index s = static_cast<Index>(f.symbols.size());
  f.a.resize(s);
  f.b.resize(s);
  f.q.resize(s, s);
  const DensityOperator& r0 = channel.willie(0);
  const Spectrum& sp = r0.spectrum();
  const Index rank = r0.rank();
  std::vector<Matrix> x(static_cast<std::size_t>(s));
  for (Index i = 0; i < s; ++i) {
    int sym = f.symbols[static_cast<std::size_t>(i)];
    double db = relative_entropy(channel.bob(sym), channel.bob(0)).value;
    double dw = relative_entropy(channel.willie(sym), r0).value;
    f.a(i) = db;
    f.b(i) = dw - db;
    x[static_cast<std::size_t>(i)] = sp.vectors.adjoint() * (channel.willie(sym).matrix() - r0.matrix()) * sp.vectors;
  }
  // chi^2 of the mixture is p'Qp with Q_ij = Tr{X_i X_j rho0^+}, evaluated in
  // the eigenbasis of rho0 as sum_k (X_i X_j)_kk / s_k.
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) {
      const Matrix& xi = x[static_cast<std::size_t>(i)];
      const Matrix& xj = x[static_cast<std::size_t>(j)];
      double total = 0.0;
      for (Index k = 0; k < rank; ++k) total += (xi.row(k) * xj.col(k))(0).real() / sp.values(k);
      f.q(i, j) = total;
    }
  }
  return f;
}

// Euclidean projection onto the probability simplex.
RealVector project_simplex(const RealVector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

struct LocalResult {
  RealVector p;
  double value;
  int iterations;
};

LocalResult ascend(const QuadraticForms& f, RealVector p) {
  double val = f.value(p);
  double step = 0.1;
  int it = 0;
  for (; it < 20000; ++it) {
    RealVector g = f.gradient(p);
    RealVector cand = project_simplex(p + step * g);
    double cv = f.value(cand);
    if (cv > val) {
      double gain = cv - val;
      p = cand;
      val = cv;
      step = std::min(step * 1.5, 100.0);
      if (gain < 1e-9) break;
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  return {p, val, it};
}

// Best point of the simplex grid with the given resolution (s <= 3).
std::pair<RealVector, double> grid_optimum(const QuadraticForms& f, double resolution) {
  const Index s = static_cast<Index>(f.symbols.size());
  const int steps = static_cast<int>(std::lround(1.0 / resolution));
  RealVector best_p = RealVector::Constant(s, 1.0 / static_cast<double>(s));
  double best = -std::numeric_limits<double>::infinity();
  RealVector p(s);
  auto consider = [&] {
    double v = f.value(p);
    if (v > best) {
      best = v;
      best_p = p;
    }
  };
  if (s == 1) {
    p(0) = 1.0;
    consider();
  } else if (s == 2) {
    for (int i = 0; i <= steps; ++i) {
      p << i * resolution, 1.0 - i * resolution;
      consider();
    }
  } else {
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; i + j <= steps; ++j) {
        p << i * resolution, j * resolution, std::max(0.0, 1.0 - (i + j) * resolution);
        consider();
      }
  }
  return {best_p, best};
}

EnsembleDistribution embed(const CqChannelPair& channel, const std::vector<int>& symbols, const RealVector& p) {
  RealVector full = RealVector::Zero(channel.alphabet_size() - 1);
  RealVector clipped = p.cwiseMax(0.0);
  clipped /= clipped.sum();
  for (std::size_t i = 0; i < symbols.size(); ++i) full(symbols[i] - 1) = clipped(static_cast<Index>(i));
  full /= full.sum();
  return EnsembleDistribution(full);
}

}  // namespace

double objective_value(const CqChannelPair& channel, const ObjectiveSpec& objective,
                       const EnsembleDistribution& ptilde) {
  ScalingReport r = square_root_coefficients(channel, ptilde);
  switch (objective.kind) {
    case Objective::MaxMessage: return r.message_coeff;
    case Objective::MinKey: return -r.key_coeff;
    case Objective::Weighted: return r.message_coeff - objective.weight * r.key_coeff;
  }
  return r.message_coeff;
}

OptimizeResult optimize_ptilde(const CqChannelPair& channel, const ObjectiveSpec& objective, std::uint64_t seed,
                               int restarts) {
  if (restarts < 1) throw Error(ErrorKind::InvalidArgument, "need at least one restart");
  QuadraticForms f = build_forms(channel, objective);
  const Index s = static_cast<Index>(f.symbols.size());

  std::vector<LocalResult> results(static_cast<std::size_t>(restarts));
  auto run = [&](int r) {
    RealVector start;
    if (r == 0) {
      start = RealVector::Constant(s, 1.0 / static_cast<double>(s));
    } else {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      start = random_probability(s, rng);
    }
    results[static_cast<std::size_t>(r)] = ascend(f, start);
  };
  unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(), static_cast<unsigned>(restarts)));
  if (workers == 1) {
    for (int r = 0; r < restarts; ++r) run(r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int r = static_cast<int>(w); r < restarts; r += static_cast<int>(workers)) run(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  OptimizeResult out;
  std::size_t best = 0;
  for (std::size_t r = 0; r < results.size(); ++r) {
    out.trace.push_back({static_cast<int>(r), results[r].iterations, results[r].value});
    if (results[r].value > results[best].value) best = r;
  }
  RealVector p = results[best].p;
  double value = results[best].value;

  if (s <= 3) {
    auto [gp, gv] = grid_optimum(f, 1e-3);
    out.grid_value = gv;
    if (gv > value) {
      LocalResult refined = ascend(f, gp);
      out.trace.push_back({restarts, refined.iterations, refined.value});
      if (refined.value > value) {
        p = refined.p;
        value = refined.value;
      }
    }
  }
  out.ptilde = embed(channel, f.symbols, p);
  out.report = square_root_coefficients(channel, out.ptilde);
  out.value = objective_value(channel, objective, out.ptilde);
  return out;
}

// ---------------------------------------------------------------------------
// Converse side

ConverseBounds converse_bounds(const CqChannelPair& channel, const EnsembleDistribution& ptilde, double mu,
                               int n, double delta, double epsilon) {
  require_alphabet(channel, ptilde);
  if (!(mu >= 0.0 && mu < 1.0)) throw Error(ErrorKind::InvalidArgument, "mu must lie in [0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
  if (n < 0) throw Error(ErrorKind::InvalidArgument, "n must be nonnegative");
  RealVector pbar(channel.alphabet_size());
  pbar(0) = 1.0 - mu;
  for (Index x = 0; x < ptilde.size(); ++x) pbar(x + 1) = mu * ptilde[x];
  pbar /= pbar.sum();
  EnsembleDistribution dist(pbar);

  auto side = [&](const std::vector<DensityOperator>& states, double& holevo, double& linear, double& loose) {
    holevo = holevo_information(dist, states);
    double weighted = 0.0;
    bool finite = true;
    for (Index x = 0; x < ptilde.size(); ++x) {
      if (ptilde[x] <= 0.0) continue;
      DivergenceValue d = relative_entropy(states[static_cast<std::size_t>(x + 1)], states.front());
      if (!d.finite) finite = false;
      else weighted += ptilde[x] * d.value;
    }
    if (!finite) {
      linear = loose = std::numeric_limits<double>::infinity();
      return;
    }
    loose = mu * weighted;
    linear = loose - relative_entropy(mixture(dist, states), states.front()).value;
  };
  ConverseBounds b{};
  side(channel.bob(), b.holevo_bob, b.bob_linear, b.bob_loose);
  side(channel.willie(), b.holevo_willie, b.willie_linear, b.willie_loose);
  b.log_m_upper = (static_cast<double>(n) * b.holevo_bob + 1.0) / (1.0 - delta);
  b.log_mk_lower = static_cast<double>(n) * b.holevo_willie - epsilon;
  return b;
}

namespace {

double loglog_slope(const std::vector<ExpansionRow>& rows, double ExpansionRow::*field) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (const auto& row : rows) {
    double r = row.*field;
    if (row.alpha <= 0.0 || r <= 0.0) continue;
    double lx = std::log(row.alpha), ly = std::log(r);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  double den = count * sxx - sx * sx;
  return count >= 2 && den > 0.0 ? (count * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double kubo_mori_metric(const DensityOperator& b, const DensityOperator& c) {
  if (b.dim() != c.dim()) throw Error(ErrorKind::DimensionMismatch, "kubo_mori_metric");
  Spectrum s = eigh(b.hermitian());
  Matrix x = s.vectors.adjoint() * (c.matrix() - b.matrix()) * s.vectors;
  double tol = b.rank_tolerance();
  double total = 0.0;
  for (Index i = 0; i < s.dim(); ++i) {
    for (Index j = 0; j < s.dim(); ++j) {
      double li = s.values(i), lj = s.values(j);
      if (li <= tol || lj <= tol) continue;
      // log-mean weight (log li - log lj)/(li - lj), 1/l on the diagonal
      double w = std::abs(li - lj) <= 1e-12 * std::max(li, lj) ? 2.0 / (li + lj)
                                                                 : (std::log(li) - std::log(lj)) / (li - lj);
      total += std::norm(x(i, j)) * w;
    }
  }
  return total;
}

ExpansionCheck expansion_check(const DensityOperator& b, const DensityOperator& c,
                                      const std::vector<double>& alphas) {
  if (b.dim() != c.dim()) throw Error(ErrorKind::DimensionMismatch, "expansion_check");
  if (!support_contained(c, b)) throw Error(ErrorKind::SupportViolation, "supp(C) is not inside supp(B)");
  ExpansionCheck out;
  Matrix binv = matrix_function(b.spectrum(), fn::Pinv{}, b.rank_tolerance()).matrix();
  Matrix x = binv * (c.matrix() - b.matrix());
  double op = std::sqrt(std::max(0.0, eigvalsh(HermitianMatrix::symmetrized(x.adjoint() * x))(0)));
  out.radius = op > 0.0 ? 1.0 / op : std::numeric_limits<double>::infinity();
  out.chi2 = chi_squared(c, b).value;
  out.kubo_mori = kubo_mori_metric(b, c);
  for (double a : alphas) {
    if (!(a >= 0.0) || a > 1.0 || a > out.radius * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "alpha " << a << " is outside the expansion radius " << out.radius;
      throw Error(ErrorKind::AlphaOutOfRadius, os.str());
    }
  }
  for (double a : alphas) {
    DensityOperator mixed(HermitianMatrix::symmetrized(a * c.matrix() + (1.0 - a) * b.matrix()),
                          b.rank_tolerance());
    ExpansionRow row{a, relative_entropy(mixed, b).value, 0.5 * a * a * out.chi2, 0.0, 0.0};
    row.residual = std::abs(row.divergence - row.leading);
    row.residual_exact = std::abs(row.divergence - 0.5 * a * a * out.kubo_mori);
    out.rows.push_back(row);
  }
  out.slope = loglog_slope(out.rows, &ExpansionRow::residual);
  out.slope_exact = loglog_slope(out.rows, &ExpansionRow::residual_exact);
  return out;
}

nlohmann::json scaling_to_json(const ScalingReport& r, bool bits) {
  double u = bits ? 1.0 / std::log(2.0) : 1.0;
  std::vector<double> p(r.ptilde.probs().data(), r.ptilde.probs().data() + r.ptilde.size());
  nlohmann::json j = {{"regime", to_string(r.regime)},
                      {"unit", bits ? "bits" : "nats"},
                      {"ptilde", p},
                      {"message_coeff", r.message_coeff * u},
                      {"key_coeff", r.key_coeff * u},
                      {"key_unclamped", r.key_raw * u},
                      {"chi2", r.chi2},
                      {"expression", r.expression}};
  if (r.kappa) j["kappa"] = *r.kappa;
  if (r.leading_constant) j["leading_constant"] = *r.leading_constant * u;
  return j;
}

}  // namespace cqcovert
