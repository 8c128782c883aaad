#pragma once

#include <ostream>

namespace gcgm {

/// Exit codes of the experiments driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitFormat = 3;

/// Entry point of the `gcgm` command line tool. Verbs: synthetic, mnist,
/// reference, residuals, rate. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gcgm
