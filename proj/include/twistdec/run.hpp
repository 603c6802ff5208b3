#pragma once

#include <iosfwd>
#include <string>

#include "twistdec/config.hpp"

namespace twistdec {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;       // verification failed, report names it
inline constexpr int kExitConfig = 2;       // scene or option problem
inline constexpr int kExitUncertified = 3;  // result outside the certified region

struct RunConfig {
  std::string scene_path;
  std::string mode = "check";
  Budgets budgets;
  Tolerances tol;
  unsigned long long seed = 1;
  std::string out_path;  // empty: stdout
  bool pretty = false;
  int jobs = 1;
  int compare_cap = 0;  // oracle-compare retruncation, 0 disables
  bool timing = false;  // real timings; otherwise timing_ms renders as 0
};

// Executes one CLI invocation: parse, build, dispatch on mode, emit the
// JSON report. Returns the process exit code; configuration problems are
// written to `err` and yield no report.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace twistdec
