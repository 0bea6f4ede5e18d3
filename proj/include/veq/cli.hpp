// SPDX-License-Identifier: MIT
/**
 * @file cli.hpp
 * @brief Entry point of the `veq` command-line tool.
 *
 * Commands: blowup, majorant, solve, tangency, demo-paper.  CSV data goes to
 * --out when given, otherwise to `out` with the run report moved to `err`.
 */
#pragma once

#include <iosfwd>

namespace veq {

namespace exit_code {
inline constexpr int ok = 0;
/// demo-paper: a computed value missed its documented tolerance.
inline constexpr int tolerance_miss = 1;
inline constexpr int input_error = 2;
inline constexpr int inconclusive = 3;
inline constexpr int no_convergence = 4;
inline constexpr int certificate_violation = 5;
}  // namespace exit_code

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace veq
