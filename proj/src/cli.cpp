#include "cqcovert/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cqcovert/channel.hpp"
#include "cqcovert/coding.hpp"
#include "cqcovert/errors.hpp"
#include "cqcovert/scaling.hpp"
#include "cqcovert/verify.hpp"

namespace cqcovert {

namespace {

using nlohmann::json;

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string format_of(const RunConfig& c, const char* fallback) { return c.format.value_or(fallback); }

template <typename T>
std::string join(const std::vector<T>& v, char sep = ';') {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

std::string num(double x) {
  if (!std::isfinite(x)) return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_optional(const std::optional<double>& x) { return x ? num(*x) : ""; }

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::WrongRegime:
    case ErrorKind::ZeroChiSquared:
    case ErrorKind::DegenerateChannel:
    case ErrorKind::NoLeakage:
    case ErrorKind::SupportViolationClassical:
      return kExitRegime;
    case ErrorKind::DimensionCapExceeded:
      return kExitCap;
    default:
      return kExitInput;
  }
}

CqChannelPair require_channel(const RunConfig& c) {
  if (c.channel_path.empty()) throw Error(ErrorKind::InvalidArgument, "--channel is required");
  return load_channel_file(c.channel_path);
}

// Uniform over the admissible symbols unless given explicitly.
EnsembleDistribution choose_ptilde(const RunConfig& c, const CqChannelPair& ch, const ScenarioReport& rep) {
  int symbols = static_cast<int>(ch.alphabet_size()) - 1;
  if (c.ptilde) {
    if (static_cast<int>(c.ptilde->size()) != symbols) {
      throw Error(ErrorKind::ValidationError, "--ptilde needs " + std::to_string(symbols) +
                                                  " entries (one per non-innocent symbol), got " +
                                                  std::to_string(c.ptilde->size()));
    }
    RealVector p(symbols);
    for (int i = 0; i < symbols; ++i) p(i) = (*c.ptilde)[static_cast<std::size_t>(i)];
    return EnsembleDistribution(p);
  }
  RealVector p = RealVector::Zero(symbols);
  if (rep.admissible.empty()) return EnsembleDistribution::uniform(symbols);
  for (int x : rep.admissible) p(x - 1) = 1.0 / static_cast<double>(rep.admissible.size());
  return EnsembleDistribution(p);
}

std::vector<double> to_vector(const EnsembleDistribution& p) {
  return std::vector<double>(p.probs().data(), p.probs().data() + p.size());
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

void validate_knobs(const RunConfig& c) {
  if (c.gamma) check_range(*c.gamma >= 0.0 && std::isfinite(*c.gamma), "--gamma must be >= 0");
  if (c.trials) check_range(*c.trials >= 1, "--trials must be >= 1");
  if (c.delta) check_range(*c.delta > 0.0 && *c.delta < 1.0, "--delta must lie in (0,1)");
  if (c.epsilon) check_range(*c.epsilon > 0.0 && std::isfinite(*c.epsilon), "--epsilon must be > 0");
  if (c.sigma_knobs) {
    check_range(c.sigma_knobs->size() == 3, "--sigma-knobs takes three values: varsigma,mu,nu");
    for (double k : *c.sigma_knobs) check_range(k >= 0.0 && k < 1.0, "--sigma-knobs values must lie in [0,1)");
  }
  for (int n : c.n_values) check_range(n >= 1, "--n values must be >= 1");
  if (c.ptilde && c.optimize) throw Error(ErrorKind::InvalidArgument, "--ptilde and --optimize are exclusive");
}

}  // namespace

// ---------------------------------------------------------------------------

CommandResult cmd_classify(const RunConfig& c, std::ostream& log) {
  CqChannelPair ch = require_channel(c);
  ScenarioReport rep = classify_scenario(ch);
  log << "classify: " << to_string(rep.scenario) << "\n";
  if (format_of(c, "json") == "json") return {kExitOk, dump(report_to_json(rep))};
  std::vector<std::string> weak;
  for (auto w : rep.weak_refinements) weak.push_back(to_string(w));
  std::ostringstream os;
  os << "class,admissible_symbols,mixture_feasible,mixture_residual,leaking_symbols,bob_disjoint_symbols,"
        "weak_covert_refinements\n";
  os << to_string(rep.scenario) << ',' << join(rep.admissible) << ',' << (rep.mixture.feasible ? "true" : "false")
     << ',' << num(rep.mixture.residual) << ',' << join(rep.leaking_symbols) << ','
     << join(rep.bob_disjoint_symbols) << ',' << join(weak) << '\n';
  return {kExitOk, os.str()};
}

CommandResult cmd_coefficients(const RunConfig& c, std::ostream& log) {
  validate_knobs(c);
  CqChannelPair ch = require_channel(c);
  ScenarioReport rep = classify_scenario(ch);
  log << "coefficients: channel class " << to_string(rep.scenario) << "\n";
  std::optional<Povm> povm;
  if (!c.povm_path.empty()) povm = load_povm_file(c.povm_path);

  bool sqrt_law = rep.scenario == ScenarioClass::SquareRootLaw;
  bool log_law = rep.scenario == ScenarioClass::SqrtNLogN;
  if (!sqrt_law && !log_law) {
    throw Error(ErrorKind::WrongRegime, std::string("no square-root scaling coefficients for class ") +
                                            to_string(rep.scenario) + "; classifier verdict: " +
                                            report_to_json(rep).dump());
  }

  json out;
  out["class"] = to_string(rep.scenario);
  ScalingReport sr;
  std::uint64_t seed = c.seed.value_or(1);
  if (c.optimize) {
    if (povm) throw Error(ErrorKind::InvalidArgument, "--optimize is not available with --povm");
    ObjectiveSpec obj = parse_objective(*c.optimize);
    OptimizeResult best = optimize_ptilde(ch, obj, seed);
    sr = best.report;
    json trace = json::array();
    for (const auto& s : best.trace) {
      trace.push_back({{"restart", s.restart}, {"iterations", s.iterations}, {"value", s.value}});
    }
    json opt = {{"objective", *c.optimize}, {"value", best.value}, {"trace", trace}};
    if (best.grid_value) opt["grid_value"] = *best.grid_value;
    out["optimizer"] = opt;
    // Message- and key-optimal distributions need not coincide; report both
    // ends and a few weighted points in between.
    json curve = json::array();
    auto point = [&](const std::string& name, const ObjectiveSpec& spec) {
      OptimizeResult r = optimize_ptilde(ch, spec, seed);
      double u = c.bits ? 1.0 / kNatsPerBit : 1.0;
      curve.push_back({{"objective", name},
                       {"ptilde", to_vector(r.ptilde)},
                       {"message_coeff", r.report.message_coeff * u},
                       {"key_coeff", r.report.key_coeff * u}});
    };
    point("max-message", {Objective::MaxMessage, 1.0});
    for (double w : {0.5, 1.0, 2.0}) point("weighted:" + num(w), {Objective::Weighted, w});
    point("min-key", {Objective::MinKey, 1.0});
    out["tradeoff"] = curve;
  } else {
    EnsembleDistribution p = choose_ptilde(c, ch, rep);
    if (povm) sr = product_measurement_coefficients(ch, *povm, p);
    else if (sqrt_law) sr = square_root_coefficients(ch, p);
    else sr = sqrtnlogn_coefficient(ch, p);
  }
  out["report"] = scaling_to_json(sr, c.bits);
  if (povm) out["measurement"] = "product POVM from " + c.povm_path;

  if (!c.n_values.empty() && sqrt_law) {
    double gamma = c.gamma.value_or(0.5);
    json conv = json::array();
    double u = c.bits ? 1.0 / kNatsPerBit : 1.0;
    for (int n : c.n_values) {
      double mu = gamma / std::sqrt(static_cast<double>(n));
      if (mu >= 1.0) continue;
      ConverseBounds b = converse_bounds(ch, sr.ptilde, mu, n, c.delta.value_or(0.1), c.epsilon.value_or(0.1));
      conv.push_back({{"n", n},
                      {"mu", mu},
                      {"holevo_bob", b.holevo_bob * u},
                      {"holevo_willie", b.holevo_willie * u},
                      {"logM_upper", b.log_m_upper * u},
                      {"logMK_lower", b.log_mk_lower * u}});
    }
    out["converse"] = conv;
  }

  if (format_of(c, "json") == "json") return {kExitOk, dump(out)};
  json r = out["report"];
  std::ostringstream os;
  os << "class,unit,ptilde,message_coeff,key_coeff,key_unclamped,chi2,kappa,leading_constant\n";
  os << to_string(rep.scenario) << ',' << r["unit"].get<std::string>() << ','
     << join(r["ptilde"].get<std::vector<double>>()) << ',' << num(r["message_coeff"].get<double>()) << ','
     << num(r["key_coeff"].get<double>()) << ',' << num(r["key_unclamped"].get<double>()) << ','
     << num(r["chi2"].get<double>()) << ','
     << csv_optional(r.contains("kappa") ? std::optional<double>(r["kappa"].get<double>()) : std::nullopt) << ','
     << csv_optional(r.contains("leading_constant") ? std::optional<double>(r["leading_constant"].get<double>())
                                                    : std::nullopt)
     << '\n';
  return {kExitOk, os.str()};
}

CommandResult cmd_simulate(const RunConfig& c, std::ostream& log) {
  validate_knobs(c);
  CqChannelPair ch = require_channel(c);
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open config file " + c.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::ParseError, c.config_path + ": " + e.what());
    }
    cfg = load_experiment_config(j);
  }
  if (!c.n_values.empty()) cfg.n_values = c.n_values;
  if (cfg.n_values.empty()) throw Error(ErrorKind::InvalidArgument, "simulate needs --n (or \"n\" in --config)");
  if (c.gamma) cfg.gamma = *c.gamma;
  if (c.trials) cfg.trials = *c.trials;
  if (c.seed) cfg.seed = *c.seed;
  if (c.delta) cfg.delta_target = *c.delta;
  if (c.epsilon) cfg.epsilon_target = *c.epsilon;
  if (c.sigma_knobs) cfg.knobs = {(*c.sigma_knobs)[0], (*c.sigma_knobs)[1], (*c.sigma_knobs)[2]};
  if (c.workers) cfg.workers = *c.workers;
  ScenarioReport rep = classify_scenario(ch);
  if (c.optimize) {
    OptimizeResult best = optimize_ptilde(ch, parse_objective(*c.optimize), cfg.seed);
    cfg.ptilde = best.ptilde;
  } else if (c.ptilde || !cfg.ptilde) {
    cfg.ptilde = choose_ptilde(c, ch, rep);
  }
  log << "simulate: class " << to_string(rep.scenario) << ", " << cfg.n_values.size() << " block lengths x "
      << cfg.trials << " trials\n";

  auto start = std::chrono::steady_clock::now();
  std::vector<TrialReport> reports = run_experiment(ch, cfg);
  log << "simulate: " << reports.size() << " trials in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n";

  std::vector<const TrialReport*> best;
  for (std::size_t i = 0; i < cfg.n_values.size(); ++i) {
    auto first = reports.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(cfg.trials));
    std::vector<TrialReport> block(first, first + cfg.trials);
    const TrialReport& b = select_best(block, cfg.delta_target, cfg.epsilon_target);
    best.push_back(&*(first + (&b - block.data())));
  }

  if (format_of(c, "csv") == "csv") {
    std::string s = std::string(kCsvHeader) + "\n";
    for (const auto& r : reports) s += csv_row(r, c.bits) + "\n";
    for (const auto* b : best) s += csv_row(*b, c.bits) + "\n";
    return {kExitOk, s};
  }
  json trials = json::array(), summary = json::array();
  for (const auto& r : reports) trials.push_back(trial_to_json(r, c.bits));
  for (const auto* b : best) summary.push_back(trial_to_json(*b, c.bits));
  json out = {{"class", to_string(rep.scenario)},
              {"ptilde", to_vector(*cfg.ptilde)},
              {"delta", cfg.delta_target},
              {"epsilon", cfg.epsilon_target},
              {"trials", trials},
              {"best", summary}};
  return {kExitOk, dump(out)};
}

CommandResult cmd_verify(const RunConfig& c, std::ostream& log) {
  if (c.trials) check_range(*c.trials >= 1, "--trials must be >= 1");
  std::vector<std::string> names = c.suites.empty() ? suite_names() : c.suites;
  VerifyOptions opt{c.trials.value_or(0), c.seed.value_or(1)};
  bool all = true;
  json suites = json::array();
  std::vector<SuiteResult> results;
  for (const auto& name : names) {
    SuiteResult r = run_suite(name, opt);
    log << "verify: " << name << (r.passed() ? " pass" : " FAIL") << ", " << r.checks << " checks, worst margin "
        << r.worst_margin << " (" << r.worst_check << "), " << r.seconds << " s\n";
    for (const auto& f : r.failures) {
      log << "  failing: " << f.check << " margin " << f.margin << " case_seed " << f.case_seed
          << " inputs " << f.inputs.dump() << "\n";
    }
    all = all && r.passed();
    suites.push_back(suite_to_json(r));
    results.push_back(std::move(r));
  }
  int code = all ? kExitOk : kExitVerify;
  if (format_of(c, "json") == "json") {
    return {code, dump({{"seed", opt.seed}, {"passed", all}, {"suites", suites}})};
  }
  std::ostringstream os;
  os << "suite,passed,cases,checks,failures,worst_margin,worst_check\n";
  for (const auto& r : results) {
    os << r.name << ',' << (r.passed() ? "true" : "false") << ',' << r.cases << ',' << r.checks << ','
       << r.failure_count << ',' << num(r.worst_margin) << ',' << r.worst_check << '\n';
  }
  return {code, os.str()};
}

CommandResult cmd_nogo(const RunConfig& c, std::ostream& log) {
  validate_knobs(c);
  CqChannelPair ch = require_channel(c);
  constexpr int kMessages = 2;
  std::vector<int> ns = c.n_values.empty() ? std::vector<int>{4} : c.n_values;
  json rows = json::array();
  std::ostringstream csv;
  csv << "n,epsilon,c_min,pe_willie,pe_bob_pair_bound,pe_bob_lower_bound,pe_bob_input_helstrom\n";
  for (int n : ns) {
    check_range(n >= kMessages, "nogo needs n >= 2 (one leaking position per codeword)");
    double c_min;
    try {
      c_min = nogo_experiment(ch, leaky_codebook(ch, n, kMessages, 1e-9), 1e-9).c_min;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoLeakage) throw;
      throw Error(ErrorKind::NoLeakage,
                  "every Willie state lies inside supp(rho0); the impossibility hypothesis is not met");
    }
    std::vector<double> grid{c_min / 64, c_min / 32, c_min / 16};
    if (c.epsilon) grid.push_back(*c.epsilon);
    for (double eps : grid) {
      NoGoReport r = nogo_experiment(ch, leaky_codebook(ch, n, kMessages, eps), eps);
      json j = nogo_to_json(r);
      j["n"] = n;
      j["messages"] = kMessages;
      rows.push_back(j);
      csv << n << ',' << num(eps) << ',' << num(r.c_min) << ',' << num(r.pe_willie) << ','
          << num(r.pe_bob_pair_bound) << ',' << num(r.pe_bob_closed_form) << ','
          << csv_optional(r.pe_bob_input_helstrom) << '\n';
    }
    log << "nogo: n=" << n << " c_min " << c_min << "\n";
  }
  if (format_of(c, "json") == "json") return {kExitOk, dump({{"rows", rows}})};
  return {kExitOk, csv.str()};
}

CommandResult dispatch(const RunConfig& c, std::ostream& log) {
  try {
    if (c.subcommand == "classify") return cmd_classify(c, log);
    if (c.subcommand == "coefficients") return cmd_coefficients(c, log);
    if (c.subcommand == "simulate") return cmd_simulate(c, log);
    if (c.subcommand == "verify") return cmd_verify(c, log);
    if (c.subcommand == "nogo") return cmd_nogo(c, log);
    log << "error: unknown subcommand '" << c.subcommand << "'\n";
    return {kExitInput, ""};
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return {exit_for(e.kind()), ""};
  } catch (const json::exception& e) {
    log << "error: ParseError: " << e.what() << "\n";
    return {kExitInput, ""};
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cqcovert: covert cq-channel coefficients, exact code simulation and checks",
               "cqcovert"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  RunConfig c;
  std::string format;
  std::vector<double> knobs, ptilde;
  std::string optimize;
  std::uint64_t seed = 1;
  double gamma = 0, delta = 0, epsilon = 0;
  int trials = 0;
  unsigned workers = 0;

  app.add_option("--channel", c.channel_path, "channel spec JSON {\"bob\":[...],\"willie\":[...]}");
  app.add_option("--out", c.out_path, "write the report here instead of stdout");
  auto* o_format = app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  app.add_option("--n", c.n_values, "comma list of block lengths")->delimiter(',');
  auto* o_gamma = app.add_option("--gamma", gamma, "prior scale, alpha_n = gamma / sqrt(n)");
  auto* o_trials = app.add_option("--trials", trials, "codebooks per n (simulate) or cases per suite (verify)");
  auto* o_delta = app.add_option("--delta", delta, "target Bob error");
  auto* o_eps = app.add_option("--epsilon", epsilon, "target covertness divergence (nats)");
  auto* o_knobs = app.add_option("--sigma-knobs", knobs, "varsigma,mu,nu")->delimiter(',')->expected(3);
  auto* o_ptilde = app.add_option("--ptilde", ptilde, "distribution over non-innocent symbols")->delimiter(',');
  auto* o_opt = app.add_option("--optimize", optimize, "max-message | min-key | weighted:<w>");
  app.add_flag("--bits", c.bits, "report information quantities in bits");
  app.add_option("--povm", c.povm_path, "fixed symbol-by-symbol measurement for Bob (JSON)");
  app.add_option("--suite", c.suites, "verify suite(s), comma list")->delimiter(',');
  app.add_option("--config", c.config_path, "experiment config JSON for simulate");
  auto* o_workers = app.add_option("--workers", workers, "worker threads for simulate (0: all cores)");
  o_ptilde->excludes(o_opt);

  for (const char* name : {"classify", "coefficients", "simulate", "verify", "nogo"}) {
    app.add_subcommand(name)->callback([&c, name] { c.subcommand = name; });
  }
  app.get_subcommand("classify")->description("scenario class of a channel");
  app.get_subcommand("coefficients")->description("message and key scaling coefficients");
  app.get_subcommand("simulate")->description("exact random-coding simulation, one CSV row per trial");
  app.get_subcommand("verify")->description("seeded property suites");
  app.get_subcommand("nogo")->description("impossibility bound for channels with leaking Willie supports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (o_format->count()) c.format = format;
  if (o_seed->count()) c.seed = seed;
  if (o_gamma->count()) c.gamma = gamma;
  if (o_trials->count()) c.trials = trials;
  if (o_delta->count()) c.delta = delta;
  if (o_eps->count()) c.epsilon = epsilon;
  if (o_knobs->count()) c.sigma_knobs = knobs;
  if (o_ptilde->count()) c.ptilde = ptilde;
  if (o_opt->count()) c.optimize = optimize;
  if (o_workers->count()) c.workers = workers;

  CommandResult r = dispatch(c, err);
  if (!r.output.empty()) {
    if (c.out_path.empty()) {
      out << r.output;
      out.flush();
    } else {
      std::ofstream f(c.out_path, std::ios::binary);
      if (!f || !(f << r.output)) {
        err << "error: cannot write " << c.out_path << "\n";
        return kExitInput;
      }
    }
  }
  return r.exit_code;
}

}  // namespace cqcovert
