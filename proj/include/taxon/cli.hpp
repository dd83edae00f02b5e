#pragma once

#include <string>
#include <vector>

namespace taxon::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadUsage = 2,
  kInputError = 3,
  kCompatibilityError = 4,
  kRemoteError = 5,
};

// Runs one command line (args[0] is the program name). Diagnostics go to
// stderr; data goes to files or stdout.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace taxon::cli
