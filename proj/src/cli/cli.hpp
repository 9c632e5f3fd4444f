#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xps::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xps::cli
