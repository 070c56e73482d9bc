#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rieszdml::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

/// Runs one command line (arguments after the program name). Results go to
/// `out` unless an output path is configured; every error is reported as a
/// single JSON line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rieszdml::cli
