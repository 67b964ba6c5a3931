#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqcovert/channel.hpp"
#include "cqcovert/divergence.hpp"

namespace cqcovert {

// Codeword row m*K + k holds the symbols of message m under key k.
struct Codebook {
  int n = 0;
  long long messages = 1;  // M
  long long keys = 1;      // K
  double gamma = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> words;

  const std::vector<int>& word(long long m, long long k) const {
    return words.at(static_cast<std::size_t>(m * keys + k));
  }
};

// ptilde is over the non-innocent symbols 1..N (entry x-1 for symbol x).
Codebook sample_codebook(const CqChannelPair& channel, int n, long long messages, long long keys,
                         double gamma, const EnsembleDistribution& ptilde, std::uint64_t seed);

// Square-root-measurement decoder for one key. The elements live in the
// eigenbasis of sigma0^{(x)n}, where every pinched codeword state is block
// diagonal; blocks are the eigenvalue clusters of sigma0^{(x)n}.
struct DecoderPovm {
  struct Block {
    double eigenvalue = 0.0;         // common sigma0^{(x)n} eigenvalue
    std::vector<Index> indices;      // product-basis indices
    std::vector<Matrix> elements;    // one per message, |indices| square
  };

  int n = 0;
  long long key = 0;
  long long messages = 0;
  Index dim = 0;
  Matrix single_basis;  // eigenvectors of sigma0 as columns
  std::vector<Block> blocks;

  // Elements in the computational basis; only sensible for small dim.
  Matrix dense_element(long long m) const;
  Matrix dense_failure() const;
  // Largest of: lambda_max(sum - I) and -lambda_min(element), over blocks.
  double validity_violation() const;
};

DecoderPovm build_srm_decoder(const Codebook& codebook, const CqChannelPair& channel, double threshold,
                              long long key = 0);

// (1/M) sum_m (1 - Tr{Lambda_m sigma^n(m, key)}) for the decoder's key.
double exact_pe_bob(const Codebook& codebook, const CqChannelPair& channel, const DecoderPovm& decoder);

// sigma^n(m,k) or rho^n(m,k) as a dense matrix.
Matrix codeword_state(const std::vector<DensityOperator>& states, const std::vector<int>& word);

DensityOperator willie_average_state(const Codebook& codebook, const CqChannelPair& channel);

struct CovertnessReport {
  double divergence;   // D(rho-bar^n || rho0^{(x)n}) in nats, may be +inf
  double helstrom_pe;  // Willie's optimal error for rho-bar^n versus rho0^{(x)n}
};

CovertnessReport covertness_report(const Codebook& codebook, const CqChannelPair& channel);

struct SimKnobs {
  double varsigma = 0.1;
  double mu = 0.1;
  double nu = 0.1;
};

struct CodeSizes {
  double log_messages_raw;  // formula value, nats
  double log_keys_raw;
  long long messages;  // max(1, ceil(exp(raw)))
  long long keys;
  double threshold;    // decoder threshold a
};

inline constexpr long long kMaxCodewords = 4096;

// Sizes from the multi-symbol achievability formulas. Throws WrongRegime when
// a symbol in the support of ptilde has an infinite divergence.
CodeSizes code_sizes(const CqChannelPair& channel, const EnsembleDistribution& ptilde, int n, double gamma,
                     const SimKnobs& knobs, std::optional<long long> keys_override = std::nullopt);

struct ExperimentConfig {
  std::vector<int> n_values;
  double gamma = 0.5;
  SimKnobs knobs;
  int trials = 20;
  std::uint64_t seed = 1;
  double delta_target = 0.1;
  double epsilon_target = 0.1;
  std::optional<EnsembleDistribution> ptilde;  // default uniform over 1..N
  std::optional<long long> keys_override;
  unsigned workers = 0;  // 0: hardware concurrency
};

ExperimentConfig load_experiment_config(const nlohmann::json& j);

struct TrialReport {
  int n = 0;
  int trial = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  CodeSizes sizes{};
  double pe_bob = 0.0;
  double covert_divergence = 0.0;
  double pe_willie = 0.0;
};

std::uint64_t trial_seed(std::uint64_t master, int n, int trial);

TrialReport run_trial(const CqChannelPair& channel, const ExperimentConfig& config, int n, int trial);

// Ordered by (n as listed, trial).
std::vector<TrialReport> run_experiment(const CqChannelPair& channel, const ExperimentConfig& config);

// Minimizes max(pe_bob/delta, D/epsilon); ties go to the earlier report.
const TrialReport& select_best(const std::vector<TrialReport>& reports, double delta_target,
                               double epsilon_target);

// n D(rho_alpha || rho0) for alpha = gamma/sqrt(n) and rho_alpha = (1-alpha) rho0 + alpha rho-tilde.
double ensemble_divergence(const CqChannelPair& channel, const EnsembleDistribution& ptilde, int n,
                           double gamma);

inline const char* kCsvHeader = "n,gamma,seed,logM_nats,logK_nats,pe_bob,covert_D_nats,pe_willie";
std::string csv_row(const TrialReport& r, bool bits);
nlohmann::json trial_to_json(const TrialReport& r, bool bits);

// ---------------------------------------------------------------------------
// Impossibility experiment with pure inputs. Each codeword is a superposition
// of input strings; the cq channel sees the string populations.

struct NoGoCodeword {
  std::vector<std::pair<std::vector<int>, Complex>> amplitudes;  // string, amplitude
};

struct NoGoCodebook {
  int n = 0;
  std::vector<NoGoCodeword> codewords;
};

// M codewords sqrt(1-t)|0^n> + sqrt(t)|x* at position m>, t = min(1, 2 eps / c),
// with x* the most leaking symbol and c its leakage.
NoGoCodebook leaky_codebook(const CqChannelPair& channel, int n, int messages, double epsilon);

struct NoGoReport {
  double epsilon = 0.0;
  double c_min = 0.0;
  std::vector<double> c;  // per codeword
  double pe_willie = 0.0;  // projector detector {P0^n, I - P0^n}
  std::vector<int> admissible;  // codewords with 1-|a0|^2 <= 4 eps / c_min
  double pe_bob_pair_bound = 0.0;    // pairing adjacent admissible codewords
  double pe_bob_closed_form = 0.0;   // max(0, 1/4 - sqrt(eps / c_min))
  double pe_bob_closed_form_raw = 0.0;
  std::optional<double> pe_bob_input_helstrom;  // two codewords only
};

NoGoReport nogo_experiment(const CqChannelPair& channel, const NoGoCodebook& codebook, double epsilon);
nlohmann::json nogo_to_json(const NoGoReport& r);

}  // namespace cqcovert
