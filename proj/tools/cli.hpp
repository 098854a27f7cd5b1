#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace holder::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitViolation = 2;

/// Runs one subcommand. argv[0] is the program name. Diagnostics go to err;
/// results go to files named by --out.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace holder::cli
