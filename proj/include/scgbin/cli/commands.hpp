#pragma once

#include <iosfwd>

namespace scgbin::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       ///< unexpected runtime failure (I/O and similar)
  kExitConfig = 2,        ///< configuration or input validation
  kExitEmpty = 3,         ///< a stage produced nothing (e.g. zero events detected)
  kExitConvergence = 4,   ///< SVM solver hit its iteration cap
};

/// Parses the command line and runs one subcommand. Never throws; failures
/// are reported on `err` and mapped to an exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scgbin::cli
