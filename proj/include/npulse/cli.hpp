#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace npulse {

inline constexpr const char* kToolName = "npulse";
inline constexpr const char* kToolVersion = "1.0.0";

/// Runs one command. `args` excludes the program name. Returns the process
/// exit code: 0 success, 2 configuration or format error, 3 numerical
/// failure, 1 anything else.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace npulse
