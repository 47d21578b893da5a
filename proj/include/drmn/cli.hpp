#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "drmn/error.hpp"

namespace drmn {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitShape = 5;

int exit_code_for(Errc code);

/// Runs one command. `args` excludes the program name.
/// Commands: gen-synth, train, eval, inspect-attn, gradcheck.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace drmn
