#pragma once

#include <ostream>

namespace videograph {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitUsage = 2 };

/// Entry point of the `videograph` tool. Output goes to `out`, diagnostics
/// and usage text to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace videograph
