#pragma once

#include <string>
#include <vector>

namespace refergate {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 runtime failure, 2 input/validation failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitInput = 2;

// Full command-line entry point (evaluate / simulate / compare). Never
// throws; errors are reported on stderr and encoded in the exit status.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

// Applies the REFERGATE_THREADS cap to OpenMP if the variable is set.
void apply_thread_cap_from_env();

}  // namespace refergate
