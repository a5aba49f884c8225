#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tclm::cli {

enum ExitCode : int {
    kSuccess = 0,
    kNumericalFailure = 1,
    kInputError = 2,
};

/// Runs the tool with argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tclm::cli
