#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cqcovert/coding.hpp"
#include "cqcovert/random.hpp"
#include "fixtures.hpp"

using namespace cqcovert;
using fixtures::diag_state;

namespace {

const EnsembleDistribution kOne(RealVector::Ones(1));

CqChannelPair random_channel(Index d, int symbols, Rng& rng) {
  std::vector<DensityOperator> b, w;
  for (int x = 0; x < symbols; ++x) {
    b.push_back(random_full_rank_density(d, rng));
    w.push_back(random_full_rank_density(d, rng));
  }
  return CqChannelPair(b, w);
}

Codebook fixed_codebook(int n, long long m, long long k, std::vector<std::vector<int>> words) {
  Codebook cb;
  cb.n = n;
  cb.messages = m;
  cb.keys = k;
  cb.words = std::move(words);
  return cb;
}

// Dense construction straight from the definition: pinch against
// sigma0^{(x)n}, take {sigmahat - e^a sigma0^n > 0}, normalize by the
// pseudo inverse square root of the sum.
std::vector<Matrix> dense_srm(const Codebook& cb, const CqChannelPair& c, double a, long long key) {
  DensityOperator s0n = kron_power(c.bob(0), cb.n);
  std::vector<Matrix> proj;
  Matrix sum = Matrix::Zero(s0n.dim(), s0n.dim());
  for (long long m = 0; m < cb.messages; ++m) {
    HermitianMatrix sm = HermitianMatrix::symmetrized(codeword_state(c.bob(), cb.word(m, key)));
    HermitianMatrix hat = pinching(s0n.hermitian(), sm);
    Matrix p = spectral_projection_nonneg(hat - s0n.hermitian() * std::exp(a), true).matrix();
    proj.push_back(p);
    sum += p;
  }
  Matrix ih = matrix_function(HermitianMatrix::symmetrized(sum), fn::SqrtPinv{}).matrix();
  for (auto& p : proj) p = ih * p * ih;
  return proj;
}

double dense_pe(const Codebook& cb, const CqChannelPair& c, const std::vector<Matrix>& lam, long long key) {
  double s = 0.0;
  for (long long m = 0; m < cb.messages; ++m) {
    s += trace_product(lam[static_cast<std::size_t>(m)], codeword_state(c.bob(), cb.word(m, key)));
  }
  return 1.0 - s / static_cast<double>(cb.messages);
}

}  // namespace

TEST_CASE("sample_codebook") {
  CqChannelPair c = fixtures::canonical_qubit();
  Codebook zero = sample_codebook(c, 6, 3, 2, 0.0, kOne, 7);
  for (const auto& w : zero.words)
    for (int x : w) CHECK(x == 0);

  Codebook a = sample_codebook(c, 4, 2, 1, 0.5, kOne, 99);
  Codebook b = sample_codebook(c, 4, 2, 1, 0.5, kOne, 99);
  CHECK(a.words == b.words);
  CHECK(a.alpha == doctest::Approx(0.25));

  Codebook big = sample_codebook(c, 100, 1000, 1, 3.0, kOne, 5);
  double count = 0;
  for (const auto& w : big.words)
    for (int x : w) count += (x != 0);
  double alpha = 0.3, total = 1e5;
  CHECK(std::abs(count / total - alpha) <= 3.0 * std::sqrt(alpha * (1 - alpha) / total));

  // Two non-innocent symbols split by ptilde.
  CqChannelPair three({diag_state({0.9, 0.1}), diag_state({0.6, 0.4}), diag_state({0.5, 0.5})},
                      {diag_state({0.9, 0.1}), diag_state({0.6, 0.4}), diag_state({0.5, 0.5})});
  RealVector p(2);
  p << 0.25, 0.75;
  Codebook split = sample_codebook(three, 100, 1000, 1, 5.0, EnsembleDistribution(p), 6);
  double ones = 0, twos = 0;
  for (const auto& w : split.words)
    for (int x : w) {
      ones += (x == 1);
      twos += (x == 2);
    }
  double frac = ones / (ones + twos);
  CHECK(std::abs(frac - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / (ones + twos)));

  CHECK_THROWS_AS(sample_codebook(c, 4, 2, 1, 2.0, kOne, 1), Error);
  CHECK_THROWS_AS(sample_codebook(c, 4, 2, 1, -0.1, kOne, 1), Error);
  try {
    sample_codebook(c, 4, 2, 1, 2.5, kOne, 1);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::AlphaOutOfRange);
  }
}

TEST_CASE("block decoder matches the dense construction") {
  Rng rng(20);
  for (int t = 0; t < 30; ++t) {
    int n = 2 + t % 2;
    CqChannelPair c = random_channel(2, 3, rng);
    long long m = 2 + t % 3;
    RealVector p(2);
    p << 0.5, 0.5;
    Codebook cb = sample_codebook(c, n, m, 2, 0.9, EnsembleDistribution(p), rng());
    double a = 0.05 * (t % 4);
    for (long long k = 0; k < 2; ++k) {
      DecoderPovm dec = build_srm_decoder(cb, c, a, k);
      auto ref = dense_srm(cb, c, a, k);
      for (long long j = 0; j < m; ++j) {
        CHECK((dec.dense_element(j) - ref[static_cast<std::size_t>(j)]).norm() < 1e-8);
      }
      CHECK(std::abs(exact_pe_bob(cb, c, dec) - dense_pe(cb, c, ref, k)) < 1e-9);
      CHECK(dec.validity_violation() < 1e-8);
      Matrix fail = dec.dense_failure();
      CHECK(eigvalsh(HermitianMatrix::symmetrized(fail)).minCoeff() > -1e-8);
    }
  }
}

TEST_CASE("decoder special cases") {
  CqChannelPair c = fixtures::canonical_qubit();
  // M = 1: the element is the projector itself.
  Codebook one = fixed_codebook(3, 1, 1, {{1, 0, 1}});
  DecoderPovm d1 = build_srm_decoder(one, c, 0.2);
  Matrix e = d1.dense_element(0);
  CHECK((e * e - e).norm() < 1e-10);
  CHECK(e.trace().real() > 0.5);

  // Diagonal channel: everything stays diagonal.
  Codebook two = fixed_codebook(3, 2, 1, {{1, 0, 0}, {0, 0, 1}});
  DecoderPovm d2 = build_srm_decoder(two, c, 0.1);
  for (long long m = 0; m < 2; ++m) {
    Matrix el = d2.dense_element(m);
    Matrix off = el;
    off.diagonal().setZero();
    CHECK(off.norm() < 1e-12);
  }

  // Orthogonal pure codewords are decoded perfectly.
  CqChannelPair pure({diag_state({0.5, 0.5}), diag_state({1.0, 0.0}), diag_state({0.0, 1.0})},
                     {diag_state({0.5, 0.5}), diag_state({0.5, 0.5}), diag_state({0.5, 0.5})});
  Codebook orth = fixed_codebook(2, 2, 1, {{1, 1}, {2, 2}});
  DecoderPovm d3 = build_srm_decoder(orth, pure, 0.1);
  CHECK(exact_pe_bob(orth, pure, d3) < 1e-10);

  // Identical codewords cannot be told apart.
  Codebook same = fixed_codebook(3, 2, 1, {{1, 0, 1}, {1, 0, 1}});
  CHECK(exact_pe_bob(same, c, build_srm_decoder(same, c, 0.1)) >= 0.5 - 1e-12);

  Codebook other = fixed_codebook(3, 3, 1, {{1, 0, 1}, {1, 0, 1}, {0, 0, 0}});
  CHECK_THROWS_AS(exact_pe_bob(other, c, d2), Error);
  CHECK_THROWS_AS(build_srm_decoder(two, c, 0.1, 1), Error);
}

TEST_CASE("SRM error is at least the Helstrom optimum for two messages") {
  Rng rng(21);
  CqChannelPair canon = fixtures::canonical_qubit();
  for (int t = 0; t < 60; ++t) {
    CqChannelPair c = t % 2 ? canon : random_channel(2, 2, rng);
    int n = 2 + t % 4;
    Codebook cb = sample_codebook(c, n, 2, 1, 0.8, kOne, rng());
    DecoderPovm dec = build_srm_decoder(cb, c, 0.05 * (t % 3));
    double pe = exact_pe_bob(cb, c, dec);
    DensityOperator s1(HermitianMatrix::symmetrized(codeword_state(c.bob(), cb.word(0, 0))));
    DensityOperator s2(HermitianMatrix::symmetrized(codeword_state(c.bob(), cb.word(1, 0))));
    CHECK(pe >= helstrom_error(s1, s2) - 1e-10);
    CHECK(dec.validity_violation() < 1e-8);
  }
}

TEST_CASE("willie_average_state and covertness_report") {
  CqChannelPair c = fixtures::canonical_qubit();
  Codebook zero = fixed_codebook(3, 2, 1, {{0, 0, 0}, {0, 0, 0}});
  DensityOperator avg = willie_average_state(zero, c);
  CHECK((avg.matrix() - kron_power(c.willie(0), 3).matrix()).norm() < 1e-14);
  CovertnessReport r0 = covertness_report(zero, c);
  CHECK(std::abs(r0.divergence) < 1e-12);
  CHECK(r0.helstrom_pe == 0.5);

  Codebook single = fixed_codebook(1, 1, 1, {{1}});
  CHECK(std::abs(covertness_report(single, c).divergence - relative_entropy(c.willie(1), c.willie(0)).value) < 1e-12);
  Codebook word = fixed_codebook(3, 1, 1, {{1, 0, 1}});
  CHECK((willie_average_state(word, c).matrix() -
         tensor(tensor(c.willie(1), c.willie(0)), c.willie(1)).matrix()).norm() < 1e-14);

  Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    CqChannelPair rc = random_channel(2, 3, rng);
    RealVector p(2);
    p << 0.3, 0.7;
    Codebook cb = sample_codebook(rc, 3, 3, 2, 1.0, EnsembleDistribution(p), rng());
    DensityOperator rbar = willie_average_state(cb, rc);
    CHECK(std::abs(rbar.hermitian().trace() - 1.0) < 1e-9);
    DensityOperator r0n = kron_power(rc.willie(0), 3);
    CovertnessReport rep = covertness_report(cb, rc);
    CHECK(std::abs(rep.divergence - relative_entropy(rbar, r0n).value) < 1e-10);
    CHECK(std::abs(rep.helstrom_pe - 0.5 * (1 - 0.5 * trace_distance(rbar, r0n))) < 1e-10);
  }

  // Leaking symbol in use: infinite divergence.
  CqChannelPair leak({diag_state({0.9, 0.1}), diag_state({0.6, 0.4})},
                     {diag_state({1.0, 0.0}), diag_state({0.5, 0.5})});
  CHECK(std::isinf(covertness_report(word, leak).divergence));
}

TEST_CASE("ensemble average of the Willie state approaches rho_alpha^n") {
  CqChannelPair c = fixtures::canonical_qubit();
  const int n = 3, books = 200;
  const long long m = 2, k = 2;
  const double gamma = 0.8, alpha = gamma / std::sqrt(3.0);
  Matrix acc = Matrix::Zero(8, 8);
  for (int b = 0; b < books; ++b) {
    acc += willie_average_state(sample_codebook(c, n, m, k, gamma, kOne, derive_seed(23, b)), c).matrix();
  }
  acc /= books;
  DensityOperator ra(HermitianMatrix::symmetrized((1 - alpha) * c.willie(0).matrix() + alpha * c.willie(1).matrix()));
  CHECK((acc - kron_power(ra, n).matrix()).norm() <= 5.0 / std::sqrt(static_cast<double>(books * m * k)));
}

TEST_CASE("finite-n ensemble divergence bound") {
  CqChannelPair c = fixtures::canonical_qubit();
  double chi2 = chi_squared(c.willie(1), c.willie(0)).value;
  for (double gamma : {0.05, 0.1, 0.2, 0.3}) {
    for (int n = 1; n <= 40; ++n) {
      double nd = ensemble_divergence(c, kOne, n, gamma);
      CHECK(nd <= gamma * gamma * chi2 + 1e-12);
      CHECK(nd >= 0.0);
    }
  }
  double nd = ensemble_divergence(c, kOne, 100, 0.1);
  CHECK(std::abs(nd - 0.005 * chi2) / (0.005 * chi2) < 0.1);
}

TEST_CASE("code sizes") {
  CqChannelPair c = fixtures::canonical_qubit();
  double d = relative_entropy(c.bob(1), c.bob(0)).value;
  SimKnobs k{0.3, 0.1, 0.1};
  CodeSizes s = code_sizes(c, kOne, 9, 0.5, k);
  CHECK(std::abs(s.log_messages_raw - 0.7 * 1.5 * d) < 1e-12);
  CHECK(std::abs(s.log_keys_raw - 1.5 * 0.6 * d) < 1e-12);
  CHECK(std::abs(s.threshold - 0.81 * 1.5 * d) < 1e-12);
  CHECK(s.messages == static_cast<long long>(std::ceil(std::exp(s.log_messages_raw))));
  CHECK(code_sizes(c, kOne, 9, 0.5, k, 1).keys == 1);
  CHECK(code_sizes(c, kOne, 9, 0.0, k).messages == 1);

  CqChannelPair leak({diag_state({1.0, 0.0}), diag_state({0.5, 0.5})},
                     {diag_state({0.9, 0.1}), diag_state({0.6, 0.4})});
  CHECK_THROWS_AS(code_sizes(leak, kOne, 9, 0.5, k), Error);
}

TEST_CASE("run_experiment is deterministic and thread-count independent") {
  CqChannelPair c = fixtures::canonical_qubit();
  ExperimentConfig cfg;
  cfg.n_values = {2, 4, 5};
  cfg.gamma = 0.6;
  cfg.trials = 6;
  cfg.seed = 1234;
  cfg.workers = 1;
  auto a = run_experiment(c, cfg);
  cfg.workers = 4;
  auto b = run_experiment(c, cfg);
  REQUIRE(a.size() == 18);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(csv_row(a[i], false) == csv_row(b[i], false));
  CHECK(a[0].n == 2);
  CHECK(a[17].n == 5);
  CHECK(a[7].trial == 1);

  TrialReport again = run_trial(c, cfg, 4, 1);
  CHECK(csv_row(again, false) == csv_row(a[7], false));

  const TrialReport& best = select_best({a.begin() + 6, a.begin() + 12}, 0.1, 0.1);
  for (auto it = a.begin() + 6; it != a.begin() + 12; ++it) {
    CHECK(std::max(best.pe_bob / 0.1, best.covert_divergence / 0.1) <=
          std::max(it->pe_bob / 0.1, it->covert_divergence / 0.1));
  }

  cfg.gamma = 0.0;
  for (const auto& r : run_experiment(c, cfg)) {
    CHECK(std::abs(r.covert_divergence) < 1e-12);
    CHECK(r.pe_willie == 0.5);
    CHECK(r.sizes.messages == 1);
  }

  setenv("CQCOVERT_DIM_CAP", "16", 1);
  cfg.gamma = 0.5;
  cfg.n_values = {5};
  try {
    run_experiment(c, cfg);
    FAIL("expected a cap error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionCapExceeded);
  }
  unsetenv("CQCOVERT_DIM_CAP");
}

TEST_CASE("experiment config parsing") {
  auto cfg = load_experiment_config(nlohmann::json::parse(
      R"({"n":[4,6],"gamma":0.5,"sigma_knobs":[0.3,0.1,0.2],"trials":3,"seed":9,"keys":1,"ptilde":[1.0]})"));
  CHECK(cfg.n_values == std::vector<int>{4, 6});
  CHECK(cfg.knobs.nu == 0.2);
  CHECK(*cfg.keys_override == 1);
  CHECK_THROWS_AS(load_experiment_config(nlohmann::json::parse(R"({"sigma_knobs":[0.1]})")), Error);
  CHECK_THROWS_AS(load_experiment_config(nlohmann::json::parse(R"({"gamma":"x"})")), Error);
}

TEST_CASE("no-go experiment") {
  // Willie sees symbol 1 entirely outside supp(rho0).
  CqChannelPair c({diag_state({0.9, 0.1}), diag_state({0.2, 0.8})},
                  {diag_state({1.0, 0.0}), diag_state({0.0, 1.0})});
  const double cmin = 1.0;
  for (double eps : {cmin / 64, cmin / 32, cmin / 16}) {
    NoGoCodebook cb = leaky_codebook(c, 3, 2, eps);
    NoGoReport r = nogo_experiment(c, cb, eps);
    CHECK(std::abs(r.c_min - cmin) < 1e-12);
    CHECK(std::abs(r.pe_willie - (0.5 - eps)) < 1e-12);
    CHECK(std::abs(r.pe_bob_closed_form_raw - (0.25 - std::sqrt(eps / cmin))) < 1e-15);
    REQUIRE(r.pe_bob_input_helstrom);
    CHECK(*r.pe_bob_input_helstrom >= r.pe_bob_pair_bound - 1e-12);
    CHECK(r.admissible.size() == 2);
  }
  CHECK(nogo_experiment(c, leaky_codebook(c, 3, 2, cmin / 64), cmin / 64).pe_bob_closed_form > 0.0);
  CHECK(nogo_experiment(c, leaky_codebook(c, 3, 2, cmin / 16), cmin / 16).pe_bob_closed_form == 0.0);

  // Partially leaking symbol and a dense check of the detector traces.
  CqChannelPair half({diag_state({0.9, 0.1}), diag_state({0.2, 0.8})},
                     {diag_state({1.0, 0.0}), diag_state({0.6, 0.4})});
  NoGoCodebook mixed;
  mixed.n = 2;
  NoGoCodeword innocent{{{{0, 0}, Complex(1.0, 0.0)}}};
  NoGoCodeword leaky{{{{0, 0}, Complex(std::sqrt(0.7), 0.0)}, {{1, 1}, Complex(0.0, std::sqrt(0.3))}}};
  mixed.codewords = {innocent, leaky};
  NoGoReport r = nogo_experiment(half, mixed, 0.01);
  CHECK(std::abs(r.c_min - (1.0 - 0.36)) < 1e-12);
  Matrix p0 = kron_power(DensityOperator(HermitianMatrix::diagonal(RealVector::Unit(2, 0))), 2).matrix();
  Matrix rho_leaky = 0.7 * codeword_state(half.willie(), {0, 0}) + 0.3 * codeword_state(half.willie(), {1, 1});
  double expected = (1.0 + trace_product(p0, rho_leaky)) / 4.0;
  CHECK(std::abs(r.pe_willie - expected) < 1e-12);

  // A fully leaked codeword is always flagged.
  NoGoCodebook gone;
  gone.n = 1;
  gone.codewords = {NoGoCodeword{{{{1}, Complex(1.0, 0.0)}}}};
  CHECK(nogo_experiment(c, gone, 0.01).pe_willie == 0.0);

  try {
    nogo_experiment(fixtures::canonical_qubit(), leaky_codebook(c, 3, 2, 0.01), 0.01);
    FAIL("expected NoLeakage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoLeakage);
  }
}
