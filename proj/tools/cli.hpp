#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace awl::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kEstimationError = 2,
  kDeclined = 3,
};

// Subcommands: fit, infer, policy, simulate. Failures print one line
//   awl: error kind=<kind> reason="<text>"
// to `err` and return the matching exit code.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace awl::cli
