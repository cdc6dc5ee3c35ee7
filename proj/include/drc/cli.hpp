#pragma once

#include "drc/core.hpp"

#include <iosfwd>

namespace drc {

/// Command-line entry point. Subcommands: solve, scenario, rollout,
/// reproduce-table1. Returns 0 on success, 1 on solver failure and 2 on
/// usage or input errors; diagnostics go to `err`.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Exit code for a library error: 2 for malformed input, 1 for solver failures.
int exit_code(const Error& e);

}  // namespace drc
