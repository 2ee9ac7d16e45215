#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cuped::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kEstimatorError = 3,
  kInfeasible = 4,
};

/// Runs `cuped <subcommand> [flags]`. args excludes the program name. Reports
/// go to files named by flags or to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cuped::cli
