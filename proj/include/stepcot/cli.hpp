// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace stepcot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the `stepcot` tool. Output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stepcot::cli
