// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace chgen::cli {

inline constexpr const char* kVersion = "0.1.0";

// Runs one subcommand. Returns 0 on success, 2 on invalid input, 3 on numeric
// failure, 4 on I/O or file-format errors.
int run(int argc, const char* const* argv);

}  // namespace chgen::cli
