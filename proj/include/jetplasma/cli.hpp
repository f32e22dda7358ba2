#pragma once

#include <ostream>

namespace jetplasma::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kInputError = 2 };

/// Runs the command line `argv` and returns the process exit code.  Command
/// output goes to `out` unless --out names a file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace jetplasma::cli
