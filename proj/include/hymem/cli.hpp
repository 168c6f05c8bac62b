#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hymem::cli {

enum ExitCode : int { kOk = 0, kViolations = 1, kUsage = 2, kRuntime = 3 };

/// Runs one command line (without the program name). Reports go to files or to
/// `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hymem::cli
