#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pslp::selftest {

struct Options {
  bool quick = false;               // T <= 30 instances, fewer cases
  bool inject_alpha_fault = false;  // negative control: invert the alpha range check
  std::uint64_t seed = 20240607;
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  int cases = 0;
  std::string detail;
};

struct Report {
  std::vector<SuiteResult> suites;
  bool passed() const;
};

/// Runs the closed-form vs Neumann, Sinkhorn marginal, eigenvalue bound,
/// alpha guard and reduction-equivalence suites.
Report run(const Options& options);

}  // namespace pslp::selftest
