#pragma once

#include <iosfwd>

namespace fmmbeat {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitInput = 2,
    kExitNothingFitted = 3,
};

/// Runs `fmm-beat fit|simulate|evaluate ...`. argv[0] is the program name.
/// Normal output goes to `out`; diagnostics and log lines to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fmmbeat
