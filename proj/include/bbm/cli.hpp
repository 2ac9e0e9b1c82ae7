#pragma once

// Command-line front end. run_cli is the whole program minus process plumbing, so
// tests and the acceptance suite can drive it in-process.

#include <ostream>
#include <string>
#include <vector>

namespace bbm::cli {

/// Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 failed checks.
enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kCheckFailed = 3 };

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bbm::cli
