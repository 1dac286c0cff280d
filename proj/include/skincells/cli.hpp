#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skincells::cli {

/// Exit codes of every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kFailure = 1,  // validation failure or bad input file
  kUsage = 2,
};

/// Runs the command line `args` (without the program name). Errors are written to
/// `err` as lines prefixed with "error: ".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace skincells::cli
