// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tagm::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

/// Entry point of the `tagm` tool: gen-data, train, eval, salience, params,
/// gradcheck. Output goes to `out`, diagnostics and progress to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tagm::cli
