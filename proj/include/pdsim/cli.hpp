#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdsim::cli {

enum ExitCode : int {
    ok = 0,
    coverage_failed = 1,
    invalid_input = 2,
    numerical_failure = 3,
    bind_failed = 4,
};

/// Runs `pdsim <args...>` (args excludes the program name) and returns the
/// process exit code. Normal output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace pdsim::cli
