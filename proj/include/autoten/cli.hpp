#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace autoten::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

/// Runs the command line `args` (without the program name). Normal output
/// goes to `out`, usage text and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace autoten::cli
