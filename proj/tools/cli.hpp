#pragma once

#include <string>
#include <vector>

namespace platewaste::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,     // invalid input, config or data
  kExitRuntime = 3,  // divergence, I/O failure, anything unexpected
};

// args[0] is the program name.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace platewaste::cli
