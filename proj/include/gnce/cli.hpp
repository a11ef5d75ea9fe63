// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace gnce {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

/// Entry point of the `gnce` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gnce
