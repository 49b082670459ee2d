#pragma once

#include <string>
#include <vector>

namespace regkit::cli {

/// Runs one subcommand. Returns the process exit code: 0 on success, 1 for
/// invalid input, 2 for a numerical failure. Diagnostics go to stderr.
int run(int argc, const char* const* argv);

/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args);

} // namespace regkit::cli
