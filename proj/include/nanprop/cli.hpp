#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nanprop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNanIncompatible = 2;

/// Runs the command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nanprop
