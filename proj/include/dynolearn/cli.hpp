#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dynolearn::cli {

inline constexpr const char* kVersion = "0.1.0";

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kInvariantViolation = 2,
  kIncompatiblePairing = 3,
  kNumericalFailure = 4,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
// Errors are reported on `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dynolearn::cli
