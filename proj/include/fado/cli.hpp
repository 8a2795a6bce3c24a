#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fado {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;       // bad flags, unreadable or malformed input
inline constexpr int kExitInfeasible = 2;  // infeasible boot, failed check, no legal solution
inline constexpr int kExitBudget = 3;      // oracle node budget exhausted
inline constexpr int kExitCounterexample = 4;

// Runs one `fado` command. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fado
