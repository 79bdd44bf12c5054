#pragma once

#include <ostream>

#include "oracleloom/error.hpp"

namespace oracleloom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNoData = 3;
inline constexpr int kExitProvider = 4;
inline constexpr int kExitUpstream = 5;

int exit_code_for(ErrorCode code);

/// Parses and runs one subcommand. Human output and `--json` output go to
/// `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oracleloom::cli
