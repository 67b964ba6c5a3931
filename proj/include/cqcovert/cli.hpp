#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cqcovert {

// Exit-code contract.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitRegime = 3,
  kExitCap = 4,
  kExitVerify = 5,
};

struct RunConfig {
  std::string subcommand;
  std::string channel_path;
  std::string out_path;                 // empty: stdout
  std::optional<std::string> format;    // json | csv; default per subcommand
  std::optional<std::uint64_t> seed;
  std::vector<int> n_values;
  std::optional<double> gamma;
  std::optional<int> trials;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<std::vector<double>> sigma_knobs;  // varsigma, mu, nu
  std::optional<std::vector<double>> ptilde;
  std::optional<std::string> optimize;
  bool bits = false;
  std::string povm_path;
  std::vector<std::string> suites;      // empty: all
  std::string config_path;              // experiment config JSON
  std::optional<unsigned> workers;
};

// Primary output plus exit code; diagnostics go to the log stream.
struct CommandResult {
  int exit_code = kExitOk;
  std::string output;
};

CommandResult cmd_classify(const RunConfig& config, std::ostream& log);
CommandResult cmd_coefficients(const RunConfig& config, std::ostream& log);
CommandResult cmd_simulate(const RunConfig& config, std::ostream& log);
CommandResult cmd_verify(const RunConfig& config, std::ostream& log);
CommandResult cmd_nogo(const RunConfig& config, std::ostream& log);

// Any library error becomes a diagnostic on log and the mapped exit code.
CommandResult dispatch(const RunConfig& config, std::ostream& log);

// Full command line: parse, dispatch, write output to --out or to out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cqcovert
