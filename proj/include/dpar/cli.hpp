#pragma once

#include <string>
#include <vector>

namespace dpar::cli {

// Exit codes; distinct per failure family.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // unexpected errors
inline constexpr int kExitConfig = 2;       // invalid configuration
inline constexpr int kExitStage = 3;        // stage order / missing inputs
inline constexpr int kExitCalibration = 4;  // budget infeasible
inline constexpr int kExitParse = 5;        // malformed data files

// Runs one CLI invocation (args excludes argv[0]). Testable in-process.
int run(const std::vector<std::string>& args);

}  // namespace dpar::cli
