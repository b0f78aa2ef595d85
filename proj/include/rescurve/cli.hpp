#pragma once

#include <string>
#include <vector>

namespace rescurve::cli {

// Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 estimation not possible.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitNoEstimate = 4;

int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace rescurve::cli
