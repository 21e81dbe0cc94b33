#pragma once

#include <ostream>

namespace colorfuse {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitSuccess = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs one `colorfuse` subcommand (train, colorize, export-inception-inputs,
/// eval, inspect-checkpoint). Normal output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace colorfuse
