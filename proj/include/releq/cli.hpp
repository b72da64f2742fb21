#pragma once

#include <iosfwd>

namespace releq {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitVerificationFailed = 1,
    kExitBadInput = 2,
    kExitIo = 3,
};

/// Entry point of the `releq` tool; `out`/`err` stand in for stdout/stderr.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace releq
