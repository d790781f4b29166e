#pragma once

#include <iosfwd>

namespace fes {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_engine = 3 };

/// Entry point of the `fes` tool; usable in-process with captured streams.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace fes
