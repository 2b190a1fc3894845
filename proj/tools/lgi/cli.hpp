#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lgi::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kDependencyError = 2,
  kInvariantError = 3,
};

/// Runs the `lgi` command line. `args` excludes the program name. Normal
/// output goes to `out`, progress and diagnostics to `err`; interactive
/// `think` reads commands from `in`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace lgi::cli
