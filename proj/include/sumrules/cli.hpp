#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sumrules::cli {

enum ExitStatus : int {
  kPass = 0,
  kToleranceFailure = 1,
  kInputError = 2,
  kNumericalError = 3,
};

// Parses argv (argv[0] is the program name), runs one subcommand and writes
// the report to --output (atomically) or to out. Diagnostics go to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sumrules::cli
