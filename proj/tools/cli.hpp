#pragma once

#include <ostream>

namespace hgb::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

/// Runs one `hgb` command line. Errors are reported on `err` and mapped to an
/// exit code; nothing is thrown.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hgb::cli
