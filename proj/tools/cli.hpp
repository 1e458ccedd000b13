#ifndef MSFLOW_TOOLS_CLI_HPP
#define MSFLOW_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace msflow::cli {

enum ExitCode : int { kSuccess = 0, kValidationError = 1, kComputationFailure = 2 };

/// Runs the msflow command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msflow::cli

#endif  // MSFLOW_TOOLS_CLI_HPP
