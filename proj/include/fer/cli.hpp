#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fer {

// Exit codes: 0 success, 2 usage/config/data error, 3 internal invariant violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitInternal = 3;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fer
