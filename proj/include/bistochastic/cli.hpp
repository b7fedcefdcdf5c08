#pragma once

#include <iosfwd>

namespace bistochastic::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kSuccess = 0,
  kValidationFailure = 1,
  kIoFailure = 2,
  kNumericalFailure = 3,
  kArgumentError = 4,
};

/// Entry point for the `bistochastic` tool. Subcommands: validate, embed,
/// extend, kernel-stats, compare-sinkhorn.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bistochastic::cli
