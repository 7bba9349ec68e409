#pragma once

#include <ostream>

namespace pchart {

// Exit codes: 0 success, 1 diagnostics or violations, 2 usage or I/O error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiagnostics = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pchart
