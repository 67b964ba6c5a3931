#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cqcovert {

// Seeded property sweeps. Every check reports a margin that is >= 0 when it
// holds, so the worst margin of a suite says how close it came to failing.
struct VerifyOptions {
  int trials = 0;  // 0 = suite default (per dimension where the suite sweeps dims)
  std::uint64_t seed = 1;
};

struct SuiteFailure {
  std::string check;
  double margin;
  std::uint64_t case_seed;  // rerun the case with this seed to reproduce
  nlohmann::json inputs;
};

struct SuiteResult {
  std::string name;
  long cases = 0;
  long checks = 0;
  long failure_count = 0;
  double worst_margin = 0.0;
  std::string worst_check;
  std::vector<SuiteFailure> failures;  // first few only
  double seconds = 0.0;

  bool passed() const { return failure_count == 0; }
};

const std::vector<std::string>& suite_names();
// Throws InvalidArgument for an unknown suite name.
SuiteResult run_suite(const std::string& name, const VerifyOptions& options);
nlohmann::json suite_to_json(const SuiteResult& r);

}  // namespace cqcovert
