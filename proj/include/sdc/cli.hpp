#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdc::cli {

inline constexpr const char* kToolName = "sdcaudit";
inline constexpr const char* kVersion = "0.1.0";

// Runs one tool invocation (args exclude the program name). The JSON report
// goes to --out or to `out`; diagnostics go to `err`. Returns the process
// exit code: 0 when the command succeeded (and any audited property held),
// 1 when an audited property was violated (witnesses are in the report),
// 2 for usage, parse or data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdc::cli
