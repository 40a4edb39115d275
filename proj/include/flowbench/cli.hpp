#pragma once

#include <iosfwd>

namespace flowbench::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kSolverFailure = 3, kDataError = 4 };

/// Runs one subcommand. Results go to `out`; failures are reported on `err`
/// as a one-line JSON object and mapped to an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowbench::cli
