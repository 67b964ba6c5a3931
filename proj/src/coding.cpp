#include "cqcovert/coding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <unsupported/Eigen/KroneckerProduct>

#include "cqcovert/random.hpp"

namespace cqcovert {

namespace {

// d^n, or 0 when it exceeds the cap.
std::size_t capped_power(Index d, int n) {
  const std::size_t cap = dimension_cap();
  std::size_t v = 1;
  for (int i = 0; i < n; ++i) {
    if (v > cap / static_cast<std::size_t>(d)) return 0;
    v *= static_cast<std::size_t>(d);
  }
  return v <= cap ? v : 0;
}

Index require_dimension(Index d, int n, const char* who) {
  std::size_t v = capped_power(d, n);
  if (v == 0) {
    std::ostringstream os;
    os << who << ": dimension " << d << "^" << n << " exceeds the cap " << dimension_cap();
    throw Error(ErrorKind::DimensionCapExceeded, os.str());
  }
  return static_cast<Index>(v);
}

// Eigenbasis of sigma0^{(x)n} as the n-fold product of sigma0's eigenbasis,
// with the exact product eigenvalues grouped into clusters.
struct ProductBasis {
  int n = 0;
  Index d = 0;
  Index dim = 0;
  Matrix v;
  std::vector<Matrix> rotated;  // V^dag sigma_x V
  std::vector<int> digits;      // dim * n, most significant first
  std::vector<std::vector<Index>> clusters;
  std::vector<double> cluster_value;

  ProductBasis(const std::vector<DensityOperator>& states, int n_uses) : n(n_uses) {
    const DensityOperator& s0 = states.front();
    d = s0.dim();
    dim = require_dimension(d, n, "decoder");
    v = s0.spectrum().vectors;
    const RealVector& lam = s0.spectrum().values;
    for (const auto& s : states) rotated.push_back(v.adjoint() * s.matrix() * v);

    digits.resize(static_cast<std::size_t>(dim) * static_cast<std::size_t>(n));
    RealVector value(dim);
    for (Index i = 0; i < dim; ++i) {
      Index rest = i;
      double p = 1.0;
      for (int t = n - 1; t >= 0; --t) {
        int dig = static_cast<int>(rest % d);
        rest /= d;
        digits[static_cast<std::size_t>(i) * n + t] = dig;
        p *= lam(dig);
      }
      value(i) = p;
    }
    std::vector<Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return value(a) > value(b); });
    RealVector sorted(dim);
    for (Index i = 0; i < dim; ++i) sorted(i) = value(order[static_cast<std::size_t>(i)]);
    // Products are exact up to rounding, so a purely relative tolerance
    // separates distinct values however small they are.
    for (const auto& c : eigenvalue_clusters(sorted, kClusterTolerance, 0.0)) {
      std::vector<Index> idx;
      for (Index k : c) idx.push_back(order[static_cast<std::size_t>(k)]);
      std::sort(idx.begin(), idx.end());
      cluster_value.push_back(sorted(c.front()));
      clusters.push_back(std::move(idx));
    }
  }

  int digit(Index i, int t) const { return digits[static_cast<std::size_t>(i) * n + t]; }

  // Block of the rotated codeword state on one cluster.
  Matrix block(const std::vector<int>& word, const std::vector<Index>& idx) const {
    const Index s = static_cast<Index>(idx.size());
    Matrix b(s, s);
    for (Index a = 0; a < s; ++a) {
      for (Index c = a; c < s; ++c) {
        Complex p(1.0, 0.0);
        for (int t = 0; t < n && p != Complex(0.0, 0.0); ++t) {
          p *= rotated[static_cast<std::size_t>(word[static_cast<std::size_t>(t)])](digit(idx[a], t),
                                                                                   digit(idx[c], t));
        }
        b(a, c) = p;
        b(c, a) = std::conj(p);
      }
    }
    return b;
  }
};

// Projector onto the strictly positive part of h. Block entries can be tiny
// for long words, so the zero window is relative to the operands' scale.
Matrix positive_projector(const Matrix& h, double scale) {
  Spectrum s = eigh(HermitianMatrix::symmetrized(h));
  double window = kZeroWindow * scale;
  Matrix p = Matrix::Zero(h.rows(), h.cols());
  for (Index i = 0; i < s.dim(); ++i) {
    if (s.values(i) > window) p += s.vectors.col(i) * s.vectors.col(i).adjoint();
  }
  return p;
}

Matrix product_basis_unitary(const Matrix& v, int n) {
  Matrix u = Matrix::Identity(1, 1);
  for (int t = 0; t < n; ++t) {
    Matrix next = Eigen::kroneckerProduct(u, v).eval();
    u = std::move(next);
  }
  return u;
}

void check_key(const Codebook& cb, long long key) {
  if (key < 0 || key >= cb.keys) {
    throw Error(ErrorKind::IndexMismatch, "key " + std::to_string(key) + " outside the codebook");
  }
}

}  // namespace

Codebook sample_codebook(const CqChannelPair& channel, int n, long long messages, long long keys,
                         double gamma, const EnsembleDistribution& ptilde, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "blocklength must be at least 1");
  if (messages < 1 || keys < 1) throw Error(ErrorKind::InvalidArgument, "M and K must be at least 1");
  if (ptilde.size() != channel.alphabet_size() - 1) {
    throw Error(ErrorKind::InvalidArgument, "ptilde must have one entry per non-innocent symbol");
  }
  double alpha = gamma / std::sqrt(static_cast<double>(n));
  if (!(alpha >= 0.0) || alpha >= 1.0) {
    std::ostringstream os;
    os << "alpha = gamma/sqrt(n) = " << alpha << " is outside [0, 1)";
    throw Error(ErrorKind::AlphaOutOfRange, os.str());
  }
  Codebook cb;
  cb.n = n;
  cb.messages = messages;
  cb.keys = keys;
  cb.gamma = gamma;
  cb.alpha = alpha;
  cb.seed = seed;
  Rng rng(seed);
  const Index symbols = ptilde.size();
  cb.words.assign(static_cast<std::size_t>(messages * keys), std::vector<int>(static_cast<std::size_t>(n), 0));
  for (auto& w : cb.words) {
    for (int t = 0; t < n; ++t) {
      if (uniform01(rng) >= alpha) continue;
      double u = uniform01(rng), acc = 0.0;
      int pick = -1;
      for (Index x = 0; x < symbols; ++x) {
        if (ptilde[x] <= 0.0) continue;
        acc += ptilde[x];
        pick = static_cast<int>(x);
        if (u < acc) break;
      }
      w[static_cast<std::size_t>(t)] = pick + 1;
    }
  }
  return cb;
}

// ---------------------------------------------------------------------------
// Decoder

Matrix DecoderPovm::dense_element(long long m) const {
  if (m < 0 || m >= messages) throw Error(ErrorKind::IndexMismatch, "decoder element index");
  Matrix e = Matrix::Zero(dim, dim);
  for (const auto& b : blocks) {
    const Matrix& el = b.elements[static_cast<std::size_t>(m)];
    for (std::size_t i = 0; i < b.indices.size(); ++i)
      for (std::size_t j = 0; j < b.indices.size(); ++j)
        e(b.indices[i], b.indices[j]) = el(static_cast<Index>(i), static_cast<Index>(j));
  }
  Matrix u = product_basis_unitary(single_basis, n);
  return u * e * u.adjoint();
}

Matrix DecoderPovm::dense_failure() const {
  Matrix f = Matrix::Identity(dim, dim);
  for (long long m = 0; m < messages; ++m) f -= dense_element(m);
  return f;
}

double DecoderPovm::validity_violation() const {
  double worst = 0.0;
  for (const auto& b : blocks) {
    const Index s = static_cast<Index>(b.indices.size());
    Matrix sum = Matrix::Zero(s, s);
    for (const auto& el : b.elements) {
      RealVector ev = eigvalsh(HermitianMatrix::symmetrized(el));
      worst = std::max(worst, -ev(s - 1));
      sum += el;
    }
    RealVector ev = eigvalsh(HermitianMatrix::symmetrized(sum));
    worst = std::max(worst, ev(0) - 1.0);
  }
  return worst;
}

DecoderPovm build_srm_decoder(const Codebook& codebook, const CqChannelPair& channel, double threshold,
                              long long key) {
  if (!(threshold >= 0.0)) throw Error(ErrorKind::InvalidArgument, "decoder threshold must be >= 0");
  check_key(codebook, key);
  ProductBasis basis(channel.bob(), codebook.n);
  DecoderPovm dec;
  dec.n = codebook.n;
  dec.key = key;
  dec.messages = codebook.messages;
  dec.dim = basis.dim;
  dec.single_basis = basis.v;
  const double scale = std::exp(threshold);
  for (std::size_t c = 0; c < basis.clusters.size(); ++c) {
    const auto& idx = basis.clusters[c];
    const Index s = static_cast<Index>(idx.size());
    DecoderPovm::Block blk;
    blk.eigenvalue = basis.cluster_value[c];
    blk.indices = idx;
    std::vector<Matrix> proj;
    Matrix sum = Matrix::Zero(s, s);
    for (long long m = 0; m < codebook.messages; ++m) {
      Matrix b = basis.block(codebook.word(m, key), idx);
      double size = std::max(scale * blk.eigenvalue, b.cwiseAbs().maxCoeff());
      b.diagonal().array() -= scale * blk.eigenvalue;
      proj.push_back(positive_projector(b, size));
      sum += proj.back();
    }
    Matrix inv_sqrt = matrix_function(HermitianMatrix::symmetrized(sum), fn::SqrtPinv{}).matrix();
    for (auto& p : proj) blk.elements.push_back(inv_sqrt * p * inv_sqrt);
    dec.blocks.push_back(std::move(blk));
  }
  return dec;
}

double exact_pe_bob(const Codebook& codebook, const CqChannelPair& channel, const DecoderPovm& decoder) {
  if (decoder.messages != codebook.messages || decoder.n != codebook.n) {
    throw Error(ErrorKind::IndexMismatch, "decoder was built for a different codebook");
  }
  check_key(codebook, decoder.key);
  ProductBasis basis(channel.bob(), codebook.n);
  if (basis.clusters.size() != decoder.blocks.size()) {
    throw Error(ErrorKind::IndexMismatch, "decoder was built for a different channel");
  }
  double success = 0.0;
  for (long long m = 0; m < codebook.messages; ++m) {
    const auto& w = codebook.word(m, decoder.key);
    for (const auto& blk : decoder.blocks) {
      Matrix b = basis.block(w, blk.indices);
      success += trace_product(blk.elements[static_cast<std::size_t>(m)], b);
    }
  }
  double pe = 1.0 - success / static_cast<double>(codebook.messages);
  return std::clamp(pe, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Willie

Matrix codeword_state(const std::vector<DensityOperator>& states, const std::vector<int>& word) {
  require_dimension(states.front().dim(), static_cast<int>(word.size()), "codeword_state");
  Matrix out = Matrix::Identity(1, 1);
  for (int x : word) {
    Matrix next = Eigen::kroneckerProduct(out, states.at(static_cast<std::size_t>(x)).matrix()).eval();
    out = std::move(next);
  }
  return out;
}

namespace {

Matrix average_state_matrix(const Codebook& cb, const CqChannelPair& channel) {
  Index dim = require_dimension(channel.willie_dim(), cb.n, "willie_average_state");
  std::map<std::vector<int>, long long> counts;
  for (const auto& w : cb.words) ++counts[w];
  Matrix sum = Matrix::Zero(dim, dim);
  for (const auto& [w, c] : counts) sum += static_cast<double>(c) * codeword_state(channel.willie(), w);
  return sum / static_cast<double>(cb.words.size());
}

}  // namespace

DensityOperator willie_average_state(const Codebook& codebook, const CqChannelPair& channel) {
  return DensityOperator(HermitianMatrix::symmetrized(average_state_matrix(codebook, channel)));
}

CovertnessReport covertness_report(const Codebook& codebook, const CqChannelPair& channel) {
  Matrix avg = average_state_matrix(codebook, channel);
  const auto& w = channel.willie();
  Matrix innocent = codeword_state(w, std::vector<int>(static_cast<std::size_t>(codebook.n), 0));

  RealVector diff = eigvalsh(HermitianMatrix::symmetrized(avg - innocent));
  double tn = std::min(2.0, diff.cwiseAbs().sum());
  CovertnessReport rep{0.0, std::clamp(0.5 * (1.0 - 0.5 * tn), 0.0, 0.5)};

  // D = -H(avg) - Tr{avg log rho0^{(x)n}}; the log of a product state is a
  // sum of single-use logs, so the cross term is an average over words.
  std::vector<bool> used(w.size(), false);
  for (const auto& word : codebook.words)
    for (int x : word) used[static_cast<std::size_t>(x)] = true;
  std::vector<double> cross(w.size(), 0.0);
  Matrix log0 = matrix_function(w.front().spectrum(), fn::Log{}, w.front().rank_tolerance()).matrix();
  for (std::size_t x = 0; x < w.size(); ++x) {
    if (!used[x]) continue;
    if (!support_contained(w[x], w.front())) {
      rep.divergence = std::numeric_limits<double>::infinity();
      return rep;
    }
    cross[x] = trace_product(w[x].matrix(), log0);
  }
  double cross_total = 0.0;
  for (const auto& word : codebook.words)
    for (int x : word) cross_total += cross[static_cast<std::size_t>(x)];
  cross_total /= static_cast<double>(codebook.words.size());

  RealVector ev = eigvalsh(HermitianMatrix::symmetrized(avg));
  double entropy = 0.0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 0.0) entropy -= ev(i) * std::log(ev(i));
  rep.divergence = DivergenceValue::of(-entropy - cross_total).value;
  return rep;
}

// ---------------------------------------------------------------------------
// Experiments

CodeSizes code_sizes(const CqChannelPair& channel, const EnsembleDistribution& ptilde, int n, double gamma,
                     const SimKnobs& knobs, std::optional<long long> keys_override) {
  if (ptilde.size() != channel.alphabet_size() - 1) {
    throw Error(ErrorKind::InvalidArgument, "ptilde must have one entry per non-innocent symbol");
  }
  double db = 0.0, dw = 0.0;
  for (int x = 1; x < channel.alphabet_size(); ++x) {
    double p = ptilde[x - 1];
    if (p <= 0.0) continue;
    DivergenceValue b = relative_entropy(channel.bob(x), channel.bob(0));
    DivergenceValue w = relative_entropy(channel.willie(x), channel.willie(0));
    if (!b.finite || !w.finite) {
      throw Error(ErrorKind::WrongRegime,
                  "symbol " + std::to_string(x) + " has an infinite divergence; the simulator needs contained supports");
    }
    db += p * b.value;
    dw += p * w.value;
  }
  const double root = gamma * std::sqrt(static_cast<double>(n));
  CodeSizes s{};
  s.log_messages_raw = (1.0 - knobs.varsigma) * root * db;
  s.log_keys_raw = root * std::max(0.0, (1.0 + knobs.varsigma) * dw - (1.0 - knobs.varsigma) * db);
  s.threshold = (1.0 - knobs.nu) * (1.0 - knobs.mu) * root * db;
  auto round_up = [](double logv) {
    double v = std::ceil(std::exp(logv) - 1e-12);
    if (!(v <= static_cast<double>(kMaxCodewords))) return kMaxCodewords + 1;
    return std::max(1LL, static_cast<long long>(v));
  };
  s.messages = round_up(s.log_messages_raw);
  s.keys = keys_override ? *keys_override : round_up(s.log_keys_raw);
  if (s.keys < 1) throw Error(ErrorKind::InvalidArgument, "key count must be at least 1");
  if (s.messages > kMaxCodewords || s.keys > kMaxCodewords || s.messages * s.keys > kMaxCodewords) {
    std::ostringstream os;
    os << "codebook of " << s.messages << " x " << s.keys << " codewords exceeds " << kMaxCodewords;
    throw Error(ErrorKind::DimensionCapExceeded, os.str());
  }
  return s;
}

ExperimentConfig load_experiment_config(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("n")) c.n_values = j.at("n").get<std::vector<int>>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("sigma_knobs")) {
      auto k = j.at("sigma_knobs").get<std::vector<double>>();
      if (k.size() != 3) throw Error(ErrorKind::ParseError, "sigma_knobs needs three values");
      c.knobs = {k[0], k[1], k[2]};
    }
    if (j.contains("trials")) c.trials = j.at("trials").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("delta")) c.delta_target = j.at("delta").get<double>();
    if (j.contains("epsilon")) c.epsilon_target = j.at("epsilon").get<double>();
    if (j.contains("ptilde")) {
      auto p = j.at("ptilde").get<std::vector<double>>();
      c.ptilde = EnsembleDistribution(Eigen::Map<RealVector>(p.data(), static_cast<Index>(p.size())));
    }
    if (j.contains("keys")) c.keys_override = j.at("keys").get<long long>();
    if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("experiment config: ") + e.what());
  }
  return c;
}

std::uint64_t trial_seed(std::uint64_t master, int n, int trial) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(trial));
}

namespace {

EnsembleDistribution resolve_ptilde(const CqChannelPair& channel, const ExperimentConfig& config) {
  if (config.ptilde) return *config.ptilde;
  if (channel.alphabet_size() < 2) throw Error(ErrorKind::InvalidArgument, "channel has no non-innocent symbol");
  return EnsembleDistribution::uniform(channel.alphabet_size() - 1);
}

}  // namespace

TrialReport run_trial(const CqChannelPair& channel, const ExperimentConfig& config, int n, int trial) {
  EnsembleDistribution ptilde = resolve_ptilde(channel, config);
  TrialReport r;
  r.n = n;
  r.trial = trial;
  r.gamma = config.gamma;
  r.seed = trial_seed(config.seed, n, trial);
  r.sizes = code_sizes(channel, ptilde, n, config.gamma, config.knobs, config.keys_override);
  Codebook cb = sample_codebook(channel, n, r.sizes.messages, r.sizes.keys, config.gamma, ptilde, r.seed);
  double pe = 0.0;
  for (long long k = 0; k < cb.keys; ++k) {
    DecoderPovm dec = build_srm_decoder(cb, channel, r.sizes.threshold, k);
    pe += exact_pe_bob(cb, channel, dec);
  }
  r.pe_bob = pe / static_cast<double>(cb.keys);
  CovertnessReport cov = covertness_report(cb, channel);
  r.covert_divergence = cov.divergence;
  r.pe_willie = cov.helstrom_pe;
  return r;
}

std::vector<TrialReport> run_experiment(const CqChannelPair& channel, const ExperimentConfig& config) {
  if (config.trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be at least 1");
  if (config.n_values.empty()) throw Error(ErrorKind::InvalidArgument, "no blocklengths given");
  for (int n : config.n_values) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "blocklength must be at least 1");
    Index d = std::max(channel.bob_dim(), channel.willie_dim());
    if (capped_power(d, n) == 0) {
      std::ostringstream os;
      os << "n = " << n << " needs dimension " << d << "^" << n << " above the cap " << dimension_cap();
      throw Error(ErrorKind::DimensionCapExceeded, os.str());
    }
  }
  resolve_ptilde(channel, config);

  const std::size_t tasks = config.n_values.size() * static_cast<std::size_t>(config.trials);
  std::vector<TrialReport> out(tasks);
  unsigned workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, tasks));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks) return;
      try {
        int n = config.n_values[i / static_cast<std::size_t>(config.trials)];
        int trial = static_cast<int>(i % static_cast<std::size_t>(config.trials));
        out[i] = run_trial(channel, config, n, trial);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

const TrialReport& select_best(const std::vector<TrialReport>& reports, double delta_target,
                               double epsilon_target) {
  if (reports.empty()) throw Error(ErrorKind::InvalidArgument, "select_best: no reports");
  if (!(delta_target > 0.0) || !(epsilon_target > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "select_best: targets must be positive");
  }
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    double score = std::max(reports[i].pe_bob / delta_target, reports[i].covert_divergence / epsilon_target);
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return reports[best];
}

double ensemble_divergence(const CqChannelPair& channel, const EnsembleDistribution& ptilde, int n,
                           double gamma) {
  double alpha = gamma / std::sqrt(static_cast<double>(n));
  if (!(alpha >= 0.0) || alpha > 1.0) throw Error(ErrorKind::AlphaOutOfRange, "alpha outside [0, 1]");
  std::vector<DensityOperator> rest(channel.willie().begin() + 1, channel.willie().end());
  DensityOperator tilde = mixture(ptilde, rest);
  Matrix m = (1.0 - alpha) * channel.willie(0).matrix() + alpha * tilde.matrix();
  DensityOperator rho_alpha(HermitianMatrix::symmetrized(m));
  return static_cast<double>(n) * relative_entropy(rho_alpha, channel.willie(0)).value;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string csv_row(const TrialReport& r, bool bits) {
  double u = bits ? 1.0 / std::log(2.0) : 1.0;
  std::ostringstream os;
  os << r.n << ',' << fmt(r.gamma) << ',' << r.seed << ','
     << fmt(std::log(static_cast<double>(r.sizes.messages)) * u) << ','
     << fmt(std::log(static_cast<double>(r.sizes.keys)) * u) << ',' << fmt(r.pe_bob) << ','
     << fmt(r.covert_divergence * u) << ',' << fmt(r.pe_willie);
  return os.str();
}

nlohmann::json trial_to_json(const TrialReport& r, bool bits) {
  double u = bits ? 1.0 / std::log(2.0) : 1.0;
  return {{"n", r.n},
          {"trial", r.trial},
          {"gamma", r.gamma},
          {"seed", r.seed},
          {"unit", bits ? "bits" : "nats"},
          {"M", r.sizes.messages},
          {"K", r.sizes.keys},
          {"logM", std::log(static_cast<double>(r.sizes.messages)) * u},
          {"logK", std::log(static_cast<double>(r.sizes.keys)) * u},
          {"logM_formula", r.sizes.log_messages_raw * u},
          {"logK_formula", r.sizes.log_keys_raw * u},
          {"threshold_nats", r.sizes.threshold},
          {"pe_bob", r.pe_bob},
          {"covert_D", std::isfinite(r.covert_divergence) ? nlohmann::json(r.covert_divergence * u)
                                                          : nlohmann::json("inf")},
          {"pe_willie", r.pe_willie}};
}

// ---------------------------------------------------------------------------
// Impossibility experiment

NoGoCodebook leaky_codebook(const CqChannelPair& channel, int n, int messages, double epsilon) {
  if (messages < 1 || messages > n) {
    throw Error(ErrorKind::InvalidArgument, "need 1 <= M <= n for single-position leaky codewords");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  int xstar = -1;
  double leak = 0.0;
  for (int x = 1; x < channel.alphabet_size(); ++x) {
    double l = support_leakage(channel.willie(x), channel.willie(0));
    if (l > leak) {
      leak = l;
      xstar = x;
    }
  }
  if (xstar < 0 || leak <= kSupportTolerance) {
    throw Error(ErrorKind::NoLeakage, "no non-innocent Willie state leaks outside supp(rho0)");
  }
  double t = std::min(1.0, 2.0 * epsilon / leak);
  NoGoCodebook cb;
  cb.n = n;
  for (int m = 0; m < messages; ++m) {
    std::vector<int> s(static_cast<std::size_t>(n), 0);
    s[static_cast<std::size_t>(m)] = xstar;
    NoGoCodeword w;
    w.amplitudes.push_back({std::vector<int>(static_cast<std::size_t>(n), 0), Complex(std::sqrt(1.0 - t), 0.0)});
    w.amplitudes.push_back({s, Complex(std::sqrt(t), 0.0)});
    cb.codewords.push_back(std::move(w));
  }
  return cb;
}

NoGoReport nogo_experiment(const CqChannelPair& channel, const NoGoCodebook& codebook, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  for (const auto& row : support_relations(channel)) {
    if (row.willie == SupportRelation::Contained) {
      throw Error(ErrorKind::NoLeakage, "Willie state of symbol " + std::to_string(row.symbol) +
                                            " lies inside supp(rho0); the impossibility hypothesis is not met");
    }
  }
  if (codebook.codewords.empty()) throw Error(ErrorKind::InvalidArgument, "empty codebook");
  std::vector<double> inside(static_cast<std::size_t>(channel.alphabet_size()));
  for (int x = 0; x < channel.alphabet_size(); ++x) {
    inside[static_cast<std::size_t>(x)] = 1.0 - support_leakage(channel.willie(x), channel.willie(0));
  }
  const std::vector<int> zero(static_cast<std::size_t>(codebook.n), 0);

  NoGoReport r;
  r.epsilon = epsilon;
  std::vector<std::map<std::vector<int>, Complex>> merged;
  std::vector<double> innocent_weight;
  std::vector<double> detector_trace;
  for (const auto& cw : codebook.codewords) {
    std::map<std::vector<int>, Complex> amp;
    for (const auto& [s, a] : cw.amplitudes) {
      if (static_cast<int>(s.size()) != codebook.n) throw Error(ErrorKind::InvalidArgument, "string length differs from n");
      for (int x : s)
        if (x < 0 || x >= channel.alphabet_size()) throw Error(ErrorKind::InvalidArgument, "symbol outside alphabet");
      amp[s] += a;
    }
    double norm = 0.0;
    for (const auto& [s, a] : amp) norm += std::norm(a);
    if (std::abs(norm - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "codeword amplitudes are not normalized");
    double w0 = amp.count(zero) ? std::norm(amp[zero]) : 0.0;
    double kept = w0;  // Tr{P0^n rho_m}
    double moved = 0.0;  // 1 - |a0|^2 as a sum over the other strings
    for (const auto& [s, a] : amp)
      if (s != zero) moved += std::norm(a);
    // c_m: leakage of the non-innocent part, as a weighted average.
    double leaked = 0.0;
    for (const auto& [s, a] : amp) {
      if (s == zero) continue;
      double q = 1.0;
      for (int x : s) q *= inside[static_cast<std::size_t>(x)];
      kept += std::norm(a) * q;
      leaked += (std::norm(a) / moved) * (1.0 - q);
    }
    r.c.push_back(moved > 0.0 ? leaked : std::numeric_limits<double>::quiet_NaN());
    innocent_weight.push_back(w0);
    detector_trace.push_back(kept);
    merged.push_back(std::move(amp));
  }
  r.c_min = std::numeric_limits<double>::infinity();
  for (double c : r.c)
    if (!std::isnan(c)) r.c_min = std::min(r.c_min, c);
  if (!std::isfinite(r.c_min)) {
    throw Error(ErrorKind::InvalidArgument, "every codeword is the innocent state; c_min is undefined");
  }
  const double m_count = static_cast<double>(codebook.codewords.size());
  r.pe_willie = std::accumulate(detector_trace.begin(), detector_trace.end(), 0.0) / (2.0 * m_count);

  const double radius = 4.0 * epsilon / r.c_min;
  for (std::size_t m = 0; m < innocent_weight.size(); ++m) {
    if (1.0 - innocent_weight[m] <= radius * (1.0 + 1e-12)) r.admissible.push_back(static_cast<int>(m));
  }
  double pair_sum = 0.0;
  for (std::size_t i = 0; i + 1 < r.admissible.size(); i += 2) {
    double a = std::sqrt(std::max(0.0, 1.0 - innocent_weight[static_cast<std::size_t>(r.admissible[i])]));
    double b = std::sqrt(std::max(0.0, 1.0 - innocent_weight[static_cast<std::size_t>(r.admissible[i + 1])]));
    pair_sum += 2.0 * std::max(0.0, 0.5 * (1.0 - a - b));
  }
  r.pe_bob_pair_bound = pair_sum / m_count;
  r.pe_bob_closed_form_raw = 0.25 - std::sqrt(epsilon / r.c_min);
  r.pe_bob_closed_form = std::max(0.0, r.pe_bob_closed_form_raw);

  if (merged.size() == 2) {
    Complex overlap(0.0, 0.0);
    for (const auto& [s, a] : merged[0]) {
      auto it = merged[1].find(s);
      if (it != merged[1].end()) overlap += std::conj(a) * it->second;
    }
    double f = std::min(1.0, std::norm(overlap));
    r.pe_bob_input_helstrom = 0.5 * (1.0 - std::sqrt(1.0 - f));
  }
  return r;
}

nlohmann::json nogo_to_json(const NoGoReport& r) {
  nlohmann::json j = {{"epsilon", r.epsilon},
                      {"c_min", r.c_min},
                      {"pe_willie_projector", r.pe_willie},
                      {"admissible_codewords", r.admissible},
                      {"pe_bob_pair_bound", r.pe_bob_pair_bound},
                      {"pe_bob_lower_bound", r.pe_bob_closed_form},
                      {"pe_bob_lower_bound_unclamped", r.pe_bob_closed_form_raw}};
  if (r.pe_bob_closed_form_raw <= 0.0) j["note"] = "epsilon >= c_min/16: bound clamped at 0";
  if (r.pe_bob_input_helstrom) j["pe_bob_input_helstrom"] = *r.pe_bob_input_helstrom;
  return j;
}

}  // namespace cqcovert
