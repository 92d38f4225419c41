#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gds::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

/// Runs the command line `args` (without the program name) and returns the
/// process exit code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gds::cli
