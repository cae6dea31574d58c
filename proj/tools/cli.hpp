#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epcluster::cli {

/// Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure.
enum ExitCode : int { ok = 0, config_error = 2, numerical_error = 3 };

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace epcluster::cli
