#include "cqcovert/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "cqcovert/channel.hpp"
#include "cqcovert/divergence.hpp"
#include "cqcovert/errors.hpp"
#include "cqcovert/json_io.hpp"
#include "cqcovert/random.hpp"
#include "cqcovert/scaling.hpp"

namespace cqcovert {

namespace {

constexpr std::size_t kKeptFailures = 10;

class Recorder {
 public:
  explicit Recorder(SuiteResult& r) : r_(r) { r_.worst_margin = std::numeric_limits<double>::infinity(); }

  // inputs is only built when the check fails.
  void check(const std::string& what, double margin, std::uint64_t case_seed,
             const std::function<nlohmann::json()>& inputs) {
    ++r_.checks;
    if (std::isnan(margin)) margin = -std::numeric_limits<double>::infinity();
    if (margin < r_.worst_margin) {
      r_.worst_margin = margin;
      r_.worst_check = what;
    }
    if (margin >= 0.0) return;
    ++r_.failure_count;
    if (r_.failures.size() < kKeptFailures) r_.failures.push_back({what, margin, case_seed, inputs()});
  }

 private:
  SuiteResult& r_;
};

nlohmann::json pair_json(const Matrix& a, const Matrix& b) {
  return {{"a", matrix_to_json(a)}, {"b", matrix_to_json(b)}};
}

int per_dim(const VerifyOptions& o, int fallback) { return o.trials > 0 ? o.trials : fallback; }

double frob(const Matrix& m) { return m.norm(); }

// Quantum Pinsker with the factor 1/2 in nats.
void suite_pinsker(const VerifyOptions& o, SuiteResult& out) {
  Recorder rec(out);
  for (Index d = 2; d <= 6; ++d) {
    for (int t = 0; t < per_dim(o, 1000); ++t) {
      std::uint64_t cs = derive_seed(derive_seed(o.seed, static_cast<std::uint64_t>(d)), t);
      Rng rng(cs);
      Index rank = 1 + static_cast<Index>(uniform01(rng) * d) % d;
      DensityOperator rho = random_density(d, rng, rank);
      DensityOperator sigma = t % 4 == 0 ? random_diagonal_density(d, rng) : random_density(d, rng);
      if (!support_contained(rho, sigma)) continue;
      ++out.cases;
      rec.check("pinsker d=" + std::to_string(d), pinsker_gap(rho, sigma) + 1e-9, cs,
                [&] { return pair_json(rho.matrix(), sigma.matrix()); });
    }
  }
}

// (1/c) Tr{A - A^{1-c} B^c} <= D(A||B) <= (1/c) Tr{A^{1+c} B^{-c} - A}.
void suite_sandwich(const VerifyOptions& o, SuiteResult& out) {
  Recorder rec(out);
  int pairs = per_dim(o, 500);
  for (int t = 0; t < pairs; ++t) {
    std::uint64_t cs = derive_seed(o.seed, t);
    Rng rng(cs);
    Index d = 2 + t % 4;
    DensityOperator a = random_full_rank_density(d, rng);
    DensityOperator b = random_full_rank_density(d, rng);
    double dab = relative_entropy(a, b).value;
    ++out.cases;
    for (double c : {0.1, 0.5, 1.0}) {
      double lower = (1.0 - trace_product(matrix_function(a.spectrum(), fn::Pow{1.0 - c}).matrix(),
                                          matrix_function(b.spectrum(), fn::Pow{c}).matrix())) / c;
      double upper = (trace_product(matrix_function(a.spectrum(), fn::Pow{1.0 + c}).matrix(),
                                    matrix_function(b.spectrum(), fn::Pow{-c}).matrix()) - 1.0) / c;
      auto in = [&] { return pair_json(a.matrix(), b.matrix()); };
      rec.check("sandwich lower c=" + std::to_string(c), dab - lower + 1e-8, cs, in);
      rec.check("sandwich upper c=" + std::to_string(c), upper - dab + 1e-8, cs, in);
    }
  }
}

// Tr{B A {A<0}} <= 0 <= Tr{B A {A>0}} for B positive definite.
void suite_trace_sign(const VerifyOptions& o, SuiteResult& out) {
  Recorder rec(out);
  for (Index d = 2; d <= 5; ++d) {
    for (int t = 0; t < per_dim(o, 200); ++t) {
      std::uint64_t cs = derive_seed(derive_seed(o.seed, static_cast<std::uint64_t>(d)), t);
      Rng rng(cs);
      HermitianMatrix a = random_hermitian(d, rng);
      HermitianMatrix b = random_positive_definite(d, rng);
      Matrix ba = b.matrix() * a.matrix();
      double neg = (ba * spectral_projection_negative(a, true).matrix()).trace().real();
      double pos = (ba * spectral_projection_nonneg(a, true).matrix()).trace().real();
      Matrix sum = spectral_projection_negative(a, true).matrix() + spectral_projection_nonneg(a, false).matrix() -
                   Matrix::Identity(d, d);
      ++out.cases;
      auto in = [&] { return pair_json(a.matrix(), b.matrix()); };
      rec.check("negative part", 1e-10 - neg, cs, in);
      rec.check("positive part", pos + 1e-10, cs, in);
      rec.check("projections sum to identity", 1e-10 - frob(sum), cs, in);
    }
  }
}

// Pinching commutes with A, preserves Tr{B f(A)}, and cannot increase D(.||sigma0).
void suite_pinching(const VerifyOptions& o, SuiteResult& out) {
  Recorder rec(out);
  for (Index d = 2; d <= 4; ++d) {
    for (int t = 0; t < per_dim(o, 200); ++t) {
      std::uint64_t cs = derive_seed(derive_seed(o.seed, static_cast<std::uint64_t>(d)), t);
      Rng rng(cs);
      HermitianMatrix a = random_hermitian(d, rng);
      if (t % 2 == 1) {
        // Degenerate spectrum: two eigenvalues forced equal.
        Spectrum s = eigh(a);
        s.values(1) = s.values(0);
        a = HermitianMatrix::symmetrized(s.reconstruct());
      }
      HermitianMatrix b = random_hermitian(d, rng);
      Matrix e = pinching(a, b).matrix();
      auto in = [&] { return pair_json(a.matrix(), b.matrix()); };
      ++out.cases;
      rec.check("commutator", 1e-9 - frob(e * a.matrix() - a.matrix() * e), cs, in);
      Matrix power = Matrix::Identity(d, d);
      for (int k = 0; k <= 3; ++k) {
        double lhs = trace_product(b.matrix(), power);
        double rhs = trace_product(e, power);
        rec.check("trace against A^" + std::to_string(k), 1e-9 - std::abs(lhs - rhs), cs, in);
        power = power * a.matrix();
      }
      DensityOperator rho = random_density(d, rng);
      DensityOperator sigma0 = random_full_rank_density(d, rng);
      DensityOperator pinched(pinching(sigma0.hermitian(), rho.hermitian()));
      rec.check("data processing",
                relative_entropy(rho, sigma0).value - relative_entropy(pinched, sigma0).value + 1e-9, cs,
                [&] { return pair_json(rho.matrix(), sigma0.matrix()); });
    }
  }
}

using Functional = ValueAndDerivative (*)(const DensityOperator&, const DensityOperator&, double);

// Central difference at h and h/2, one Richardson step.
double richardson_derivative(Functional f, const DensityOperator& x1, const DensityOperator& x0, double r,
                             double h) {
  auto central = [&](double step) { return (f(x1, x0, r + step).value - f(x1, x0, r - step).value) / (2 * step); };
  return (4.0 * central(h / 2) - central(h)) / 3.0;
}

// Closed-form derivatives of phi and psi against finite differences, and the
// value at r = 0 against the relative entropy.
void suite_anchors(const VerifyOptions& o, SuiteResult& out) {
  Recorder rec(out);
  int pairs = per_dim(o, 100);
  for (int t = 0; t < pairs; ++t) {
    std::uint64_t cs = derive_seed(o.seed, t);
    Rng rng(cs);
    Index d = 2 + t % 3;
    DensityOperator x1 = random_full_rank_density(d, rng);
    DensityOperator x0 = random_full_rank_density(d, rng);
    double dv = relative_entropy(x1, x0).value;
    auto in = [&] { return pair_json(x1.matrix(), x0.matrix()); };
    ++out.cases;
    for (auto [name, f] : {std::pair<const char*, Functional>{"phi", phi_functional},
                           std::pair<const char*, Functional>{"psi", psi_functional}}) {
      for (double r : {0.0, 0.1, 0.5, 0.9}) {
        ValueAndDerivative v = f(x1, x0, r);
        double fd = richardson_derivative(f, x1, x0, r, 1e-5);
        rec.check(std::string(name) + " derivative r=" + std::to_string(r), 1e-6 - std::abs(v.derivative - fd), cs,
                  in);
        if (r == 0.0) {
          rec.check(std::string(name) + " value at 0", 1e-10 - std::abs(v.value), cs, in);
          rec.check(std::string(name) + " derivative at 0 vs D", 1e-8 - std::abs(v.derivative - dv), cs, in);
        }
      }
    }
  }
}

// Second-order expansion of D(alpha C + (1-alpha) B || B).
// Commuting pairs: the remainder after alpha^2 chi2/2 is the scalar Taylor
// tail sum_i b_i f(alpha x_i) with f(t) = (1+t)log(1+t) - t - t^2/2, and
// |f(t)| <= |t|^3 / (6 (1 - |t|)).
// General pairs: the quadratic coefficient is the Kubo-Mori metric, which is
// checked against a Richardson second difference and bounded by chi2.
void suite_expansion(const VerifyOptions& o, SuiteResult& out) {
  Recorder rec(out);
  for (Index d = 2; d <= 4; ++d) {
    for (int t = 0; t < per_dim(o, 50); ++t) {
      std::uint64_t cs = derive_seed(derive_seed(o.seed, static_cast<std::uint64_t>(d)), t);
      Rng rng(cs);
      DensityOperator b = random_full_rank_density(d, rng, 0.5);
      DensityOperator c = random_diagonal_density(d, rng);
      RealVector bvals = RealVector::Constant(d, 0.0);
      // Commuting partner of c: B's spectrum placed on the diagonal.
      for (Index i = 0; i < d; ++i) bvals(i) = b.spectrum().values(i);
      DensityOperator bc(HermitianMatrix::diagonal(bvals));
      RealVector x = (c.matrix().diagonal().real() - bvals).cwiseQuotient(bvals);
      double xmax = x.cwiseAbs().maxCoeff();
      auto in = [&] { return pair_json(bc.matrix(), c.matrix()); };
      ++out.cases;
      std::vector<double> alphas{1e-3, 1e-2};
      if (xmax > 0) alphas.push_back(std::min(0.1, 0.5 / xmax));
      ExpansionCheck e = expansion_check(bc, c, alphas);
      for (const auto& row : e.rows) {
        double tail = 0.0;
        for (Index i = 0; i < d; ++i) tail += bvals(i) * std::pow(std::abs(row.alpha * x(i)), 3);
        double bound = tail / (6.0 * (1.0 - row.alpha * xmax));
        rec.check("commuting remainder alpha=" + std::to_string(row.alpha),
                  bound * (1 + 1e-9) + 1e-13 - row.residual, cs, in);
      }

      DensityOperator c2 = random_density(d, rng);
      ExpansionCheck g = expansion_check(b, c2, {0.0});
      auto in2 = [&] { return pair_json(b.matrix(), c2.matrix()); };
      double a = 1e-3;
      auto dmix = [&](double al) {
        return relative_entropy(DensityOperator(HermitianMatrix::symmetrized(al * c2.matrix() + (1 - al) * b.matrix())),
                                b)
            .value;
      };
      double second = 2.0 * (2.0 * dmix(a) / (a * a) - dmix(2 * a) / (4 * a * a));
      rec.check("quadratic coefficient", 1e-4 * g.kubo_mori + 1e-10 - std::abs(second - g.kubo_mori), cs, in2);
      rec.check("quadratic coefficient <= chi2", g.chi2 - g.kubo_mori + 1e-12, cs, in2);
    }
  }
}

// chi(p-bar, states) = mu sum ptilde D(x||0) - D(mix||0) for both receivers.
void suite_holevo(const VerifyOptions& o, SuiteResult& out) {
  Recorder rec(out);
  int channels = per_dim(o, 100);
  for (int t = 0; t < channels; ++t) {
    std::uint64_t cs = derive_seed(o.seed, t);
    Rng rng(cs);
    Index d = 2 + t % 3;
    std::vector<DensityOperator> s, w;
    for (int x = 0; x < 3; ++x) {
      s.push_back(random_full_rank_density(d, rng));
      w.push_back(random_full_rank_density(d, rng));
    }
    CqChannelPair ch(s, w);
    EnsembleDistribution p(random_probability(2, rng));
    ++out.cases;
    for (double mu : {0.01, 0.1}) {
      ConverseBounds cb = converse_bounds(ch, p, mu, 1, 0.5, 0.0);
      auto in = [&] {
        nlohmann::json j = channel_to_json(ch);
        j["ptilde"] = std::vector<double>{p[0], p[1]};
        j["mu"] = mu;
        return j;
      };
      rec.check("bob identity mu=" + std::to_string(mu), 1e-8 - std::abs(cb.holevo_bob - cb.bob_linear), cs, in);
      rec.check("willie identity mu=" + std::to_string(mu), 1e-8 - std::abs(cb.holevo_willie - cb.willie_linear),
                cs, in);
    }
  }
}

using SuiteFn = void (*)(const VerifyOptions&, SuiteResult&);

const std::map<std::string, SuiteFn>& registry() {
  static const std::map<std::string, SuiteFn> r{
      {"pinsker", suite_pinsker}, {"sandwich", suite_sandwich}, {"trace-sign", suite_trace_sign},
      {"pinching", suite_pinching}, {"anchors", suite_anchors},   {"expansion", suite_expansion},
      {"holevo", suite_holevo}};
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"pinsker", "sandwich", "trace-sign", "pinching",
                                              "anchors", "expansion",   "holevo"};
  return names;
}

SuiteResult run_suite(const std::string& name, const VerifyOptions& options) {
  auto it = registry().find(name);
  if (it == registry().end()) throw Error(ErrorKind::InvalidArgument, "unknown suite '" + name + "'");
  SuiteResult r;
  r.name = name;
  auto start = std::chrono::steady_clock::now();
  it->second(options, r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

nlohmann::json suite_to_json(const SuiteResult& r) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : r.failures) {
    failures.push_back({{"check", f.check}, {"margin", f.margin}, {"case_seed", f.case_seed}, {"inputs", f.inputs}});
  }
  return {{"suite", r.name},
          {"passed", r.passed()},
          {"cases", r.cases},
          {"checks", r.checks},
          {"failures", r.failure_count},
          {"worst_margin", r.worst_margin},
          {"worst_check", r.worst_check},
          {"failing_cases", failures}};
}

}  // namespace cqcovert
